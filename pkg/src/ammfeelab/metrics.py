"""Markout and impermanent-loss accounting, plus result emission.

Markouts are valued at the executing block's fair prices.  Because swap
outputs already embed the fee, a trader's markout is computed from the
tokens actually paid and received (no second fee subtraction), and the
pool's markout mirrors it; per trade the two sum to exactly ``-alpha``.

Two impermanent-loss figures are reported side by side: the hold-style
loss (the negative of the LP markout against holding the initial
reserves) and the divergence-style loss (the same comparison with the
accrued fee tokens stripped out of the final reserves).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .amm import Direction, PoolState, PriceTick, capital


@dataclass(frozen=True)
class TradeRecord:
    """One executed swap, pool-perspective flows signed into the pool."""

    block_index: int
    agent_class: int
    direction: Direction
    delta_a: float
    delta_b: float
    fee_amount: float
    trader_markout: float
    pool_markout: float

    @property
    def fee_side(self) -> str:
        """Token the fee was collected in (the input side)."""
        return "a" if self.direction == Direction.A_TO_B else "b"


def trade_markout(direction: Direction, amount_in: float, amount_out: float,
                  tick: PriceTick, alpha: float = 0.0) -> tuple[float, float]:
    """(trader_markout, pool_markout) of a swap at the block's fair prices."""
    if direction == Direction.A_TO_B:
        value_in = amount_in * tick.p_a
        value_out = amount_out * tick.p_b
    else:
        value_in = amount_in * tick.p_b
        value_out = amount_out * tick.p_a
    return value_out - value_in - alpha, value_in - value_out


@dataclass
class MetricLedger:
    """Per-path trade records with running class totals."""

    pool0: PoolState
    tick0: PriceTick
    records: list[TradeRecord] = field(default_factory=list)
    trader_mo_by_class: dict[int, float] = field(default_factory=dict)
    trades_by_class: dict[int, int] = field(default_factory=dict)
    final_pool: Optional[PoolState] = None
    final_tick: Optional[PriceTick] = None

    def add(self, record: TradeRecord) -> None:
        self.records.append(record)
        cls = record.agent_class
        self.trader_mo_by_class[cls] = (
            self.trader_mo_by_class.get(cls, 0.0) + record.trader_markout)
        self.trades_by_class[cls] = self.trades_by_class.get(cls, 0) + 1

    def finalize(self, final_pool: PoolState, final_tick: PriceTick) -> None:
        self.final_pool = final_pool
        self.final_tick = final_tick

    def _require_final(self) -> tuple[PoolState, PriceTick]:
        if self.final_pool is None or self.final_tick is None:
            raise ValueError("ledger not finalized")
        return self.final_pool, self.final_tick


def lp_hold_markout(ledger: MetricLedger) -> float:
    """Pool value at final prices minus the held initial reserves' value."""
    pool, tick = ledger._require_final()
    return (capital(pool.reserve_a, pool.reserve_b, tick)
            - capital(ledger.pool0.reserve_a, ledger.pool0.reserve_b, tick))


def il_divergence(ledger: MetricLedger) -> float:
    """Fee-free divergence loss versus holding; positive means loss."""
    pool, tick = ledger._require_final()
    return (capital(ledger.pool0.reserve_a, ledger.pool0.reserve_b, tick)
            - capital(pool.reserve_a - pool.fees_accrued_a,
                      pool.reserve_b - pool.fees_accrued_b, tick))


def il_hold(ledger: MetricLedger) -> float:
    """Hold-style impermanent loss, the negative of the LP markout."""
    return -lp_hold_markout(ledger)


@dataclass(frozen=True)
class SimResult:
    """Per-path metric totals."""

    path_index: int
    iu_mo: float
    uu_mo: float
    lp_mo: float
    il_divergence: float
    il_hold: float
    iu_trades: int
    uu_trades: int
    final_pool: PoolState
    ledger: Optional[MetricLedger] = None


METRIC_ORDER = ("iu_mo", "uu_mo", "lp_mo", "il_divergence", "il_hold")

# Whether a larger value is the better outcome, for report bolding.
HIGHER_IS_BETTER = {
    "iu_mo": False,
    "uu_mo": True,
    "lp_mo": True,
    "il_divergence": False,
    "il_hold": False,
}


def aggregate(results: Sequence[SimResult]) -> list[tuple[str, float, float]]:
    """(metric, mean, sample std) rows in report order; std is 0 for one path."""
    if not results:
        raise ValueError("nothing to aggregate")
    rows = []
    for name in METRIC_ORDER:
        values = np.array([getattr(r, name) for r in results], dtype=float)
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        rows.append((name, float(np.mean(values)), std))
    return rows


@dataclass(frozen=True)
class LabeledBatch:
    """One policy's per-path results under one market regime."""

    run_id: str
    regime: str
    policy: str
    results: list[SimResult]


RESULTS_HEADER = ("run_id,path_index,regime,policy,iu_mo,uu_mo,lp_mo,"
                  "il_divergence,il_hold,iu_trades,uu_trades")


def results_csv(batches: Sequence[LabeledBatch]) -> str:
    """Results CSV: one row per path plus aggregate mean and std rows."""
    lines = [RESULTS_HEADER]
    for batch in batches:
        prefix_cols = (batch.run_id, batch.regime, batch.policy)
        for r in batch.results:
            lines.append(",".join([
                prefix_cols[0], repr(r.path_index), prefix_cols[1], prefix_cols[2],
                repr(r.iu_mo), repr(r.uu_mo), repr(r.lp_mo),
                repr(r.il_divergence), repr(r.il_hold),
                repr(r.iu_trades), repr(r.uu_trades)]))
        agg = dict((name, (mean, std)) for name, mean, std in aggregate(batch.results))
        counts = {
            "iu_trades": np.array([r.iu_trades for r in batch.results], dtype=float),
            "uu_trades": np.array([r.uu_trades for r in batch.results], dtype=float),
        }
        n = len(batch.results)
        for tag, pick in (("aggregate", 0), ("aggregate_std", 1)):
            count_cells = []
            for key in ("iu_trades", "uu_trades"):
                if pick == 0:
                    count_cells.append(repr(float(np.mean(counts[key]))))
                else:
                    std = float(np.std(counts[key], ddof=1)) if n > 1 else 0.0
                    count_cells.append(repr(std))
            lines.append(",".join([
                batch.run_id, tag, batch.regime, batch.policy,
                repr(agg["iu_mo"][pick]), repr(agg["uu_mo"][pick]),
                repr(agg["lp_mo"][pick]), repr(agg["il_divergence"][pick]),
                repr(agg["il_hold"][pick]), *count_cells]))
    return "\n".join(lines) + "\n"


_METRIC_TITLES = {
    "iu_mo": "IU MO",
    "uu_mo": "UU MO",
    "lp_mo": "LP MO",
    "il_divergence": "IL (divergence)",
    "il_hold": "IL (hold)",
}


@dataclass(frozen=True)
class BatchStats:
    """Aggregate view of one (regime, policy) batch for table rendering."""

    run_id: str
    regime: str
    policy: str
    n_paths: int
    mean: dict
    std: dict


def batch_stats(batch: LabeledBatch) -> BatchStats:
    rows = aggregate(batch.results)
    return BatchStats(
        run_id=batch.run_id, regime=batch.regime, policy=batch.policy,
        n_paths=len(batch.results),
        mean=dict((name, mean) for name, mean, _ in rows),
        std=dict((name, std) for name, _, std in rows),
    )


def _format_cell(mean: float, std: float, n: int) -> str:
    if n > 1:
        return f"{mean:.2f} ± {std:.2f}"
    return f"{mean:.2f}"


def markdown_from_stats(stats: Sequence[BatchStats]) -> str:
    """Regime-by-policy comparison tables.

    Within each regime the best value per metric among the non-oracle
    policies is bolded; ties bold every tied row.
    """
    regimes: dict[str, list[BatchStats]] = {}
    for s in stats:
        regimes.setdefault(s.regime, []).append(s)

    lines = []
    for regime, group in regimes.items():
        best: dict[str, float] = {}
        for name in METRIC_ORDER:
            candidates = [s.mean[name] for s in group if s.policy != "ob"]
            if candidates:
                best[name] = max(candidates) if HIGHER_IS_BETTER[name] else min(candidates)
        lines.append(f"### {regime}")
        lines.append("")
        header = ["Market", "Alg."] + [_METRIC_TITLES[m] for m in METRIC_ORDER]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join([" --- "] * len(header)) + "|")
        for s in group:
            cells = [regime, s.policy.upper()]
            for name in METRIC_ORDER:
                cell = _format_cell(s.mean[name], s.std[name], s.n_paths)
                if s.policy != "ob" and name in best and s.mean[name] == best[name]:
                    cell = f"**{cell}**"
                cells.append(cell)
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    lines.append("Best value per metric among the non-oracle policies in bold.")
    return "\n".join(lines) + "\n"


def markdown_tables(batches: Sequence[LabeledBatch]) -> str:
    return markdown_from_stats([batch_stats(b) for b in batches])


def emit(batches: Sequence[LabeledBatch], format: str = "csv") -> str:
    """Render results as file content; byte-deterministic for fixed inputs."""
    if format == "csv":
        return results_csv(batches)
    if format in ("md", "markdown-table"):
        return markdown_tables(batches)
    raise ValueError(f"unknown format {format!r}")
