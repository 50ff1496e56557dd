"""ammfeelab: a CPMM pool simulator for comparing swap-fee algorithms.

Simulates a constant-product liquidity pool trading block by block
against fair reference prices, with an informed arbitrageur, an
uninformed noise trader gated by a relative-loss acceptance model, and
four fee policies (fixed, block-adaptive, deal-adaptive, oracle-based).
Reports markouts per participant class and impermanent loss.
"""

from ._backend import BACKEND, backend_name
from .agents import (AgentClass, TradeIntent, UUParams, iu_brute_force_oracle,
                     iu_optimal_trade, uu_accepts, uu_propose_trade,
                     uu_relative_loss)
from .amm import (Direction, PoolState, PriceTick, SwapResult, capital,
                  delta_p, init_pool, spot_rate, swap)
from .engine import (BatchResult, HistoricalSource, PolicySpec, SimConfig,
                     SweepConfig, SweepResult, SyntheticSource, fee_sweep,
                     run_batch, run_block, run_path, substream)
from .fees import (BlockAdaptiveFee, BlockObservation, DealAdaptiveFee,
                   FeePolicy, FeeSchedule, FixedFee, OracleBasedFee,
                   policy_block_adaptive, policy_deal_adaptive, policy_fixed,
                   policy_oracle_based)
from .metrics import (LabeledBatch, MetricLedger, SimResult, TradeRecord,
                      aggregate, emit, il_divergence, il_hold, lp_hold_markout,
                      trade_markout)
from .pricefeed import (REGIMES, DataError, PricePath, gbm_estimate,
                        gbm_generate, load_historical, load_historical_pair,
                        make_path, save_path)
from .rng import Stream, derive_seed

__version__ = "0.1.0"
