"""Acceptance criteria for the artifact, one test per criterion.

Each test prints a single PASS/RECORDED line (visible even under pytest
capture) and enforces its stated tolerance and runtime budget.  Runtime
budgets assume warm kernels; the session fixture compiles them first.
"""

import dataclasses
import math
import time

import numpy as np
from scipy.stats import binomtest

import ammfeelab as al
from ammfeelab.cli import main as cli_main
from ammfeelab.fees import BlockObservation


def report(capsys, line):
    with capsys.disabled():
        print(line, flush=True)


def tick(p_a=1.0, p_b=1.0, i=0):
    return al.PriceTick(block_index=i, p_a=p_a, p_b=p_b)


def test_criterion_1_optimizer_oracle_equivalence(capsys):
    """Closed-form arbitrage sizing matches an independent maximizer."""
    rng = np.random.default_rng(1001)
    fee_levels = [0, 15, 30, 45, 60]
    t0 = time.perf_counter()
    n_states, n_trades = 1000, 0
    for _ in range(n_states):
        x = 10.0 ** rng.uniform(3, 9)
        y = 10.0 ** rng.uniform(3, 9)
        pool = al.PoolState(x, y)
        m = (x / y) * rng.uniform(0.8, 1.2)
        fees = al.FeeSchedule(int(rng.choice(fee_levels)),
                              int(rng.choice(fee_levels)))
        alpha = float(rng.choice([0.0, 1e-7 * x]))
        price = tick(p_b=m)
        closed = al.iu_optimal_trade(pool, price, fees, alpha=alpha)
        oracle = al.iu_brute_force_oracle(pool, price, fees, alpha=alpha,
                                          grid_resolution=2000)
        assert (closed is None) == (oracle is None), \
            f"trade/no-trade mismatch at x={x}, y={y}, m={m}, fees={fees}"
        if closed is not None:
            n_trades += 1
            assert closed.direction == oracle.direction
            assert abs(closed.amount_in - oracle.amount_in) <= 1e-5 * oracle.amount_in
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(capsys, f"ACCEPTANCE 1 PASS: optimizer matches oracle on "
                   f"{n_states} states ({n_trades} trades) in {elapsed:.2f}s")


def test_criterion_2_zero_fee_gap_closure(capsys):
    """Zero-fee arbitrage lands the pool exactly on the fair rate."""
    rng = np.random.default_rng(1002)
    fees = al.FeeSchedule(0, 0)
    t0 = time.perf_counter()
    n_pools = 1000
    for _ in range(n_pools):
        x = 10.0 ** rng.uniform(3, 9)
        y = 10.0 ** rng.uniform(3, 9)
        pool = al.PoolState(x, y)
        gap = rng.uniform(0.01, 0.2) * (1.0 if rng.uniform() < 0.5 else -1.0)
        m = (x / y) * (1.0 + gap)
        price = tick(p_b=m)
        trade = al.iu_optimal_trade(pool, price, fees)
        assert trade is not None
        executed = al.swap(pool, trade.direction, trade.amount_in, 0.0)
        assert abs(al.spot_rate(executed.pool_after) - m) / m < 1e-9
        assert al.iu_optimal_trade(executed.pool_after, price, fees) is None
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(capsys, f"ACCEPTANCE 2 PASS: gap closed within 1e-9 and no "
                   f"residual trade on {n_pools} pools in {elapsed:.2f}s")


def test_criterion_3_conservation_soak(capsys):
    """Markout conservation and LP telescoping over a long randomized run."""
    config = al.SimConfig(
        policy=al.PolicySpec(kind="da"),
        uu=al.UUParams(prob_trade_per_block=0.8),
        source=al.SyntheticSource(n_paths=1, n_blocks=100_000, regime="high_vol"),
        master_seed=1003,
        alpha=0.01,
        keep_trades=True,
    )
    t0 = time.perf_counter()
    result = al.run_batch(config).results[0]
    records = result.ledger.records
    assert len(records) > 50_000
    for rec in records:
        residual = rec.trader_markout + rec.pool_markout + config.alpha
        scale = max(1.0, abs(rec.trader_markout), abs(rec.pool_markout))
        assert abs(residual) <= 1e-9 * scale
    final_tick = result.ledger.final_tick
    flow_sum = math.fsum(rec.delta_a * final_tick.p_a + rec.delta_b * final_tick.p_b
                         for rec in records)
    lp = al.lp_hold_markout(result.ledger)
    assert abs(lp - flow_sum) <= 1e-6 * max(1.0, abs(lp))
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    report(capsys, f"ACCEPTANCE 3 PASS: conservation and telescoping over "
                   f"{len(records)} trades / 100000 blocks in {elapsed:.2f}s")


def test_criterion_4_fee_policy_invariants(capsys):
    """Adaptive fee sum and bounds hold exactly through a 1e5-event storm."""
    rng = np.random.default_rng(1004)
    moves = rng.integers(-1, 2, size=100_000)
    ba = al.policy_block_adaptive()
    da = al.policy_deal_adaptive()
    t0 = time.perf_counter()
    for move in moves:
        ba.on_block_start(BlockObservation(1.0, 1.0 + 0.01 * float(move)))
        da.on_trade(al.Direction.A_TO_B if move <= 0 else al.Direction.B_TO_A)
        assert ba.fee_a_to_b + ba.fee_b_to_a == 60
        assert da.fee_a_to_b + da.fee_b_to_a == 60
        assert 0 <= ba.fee_a_to_b <= 60 and 0 <= ba.fee_b_to_a <= 60
        assert 0 <= da.fee_a_to_b <= 60 and 0 <= da.fee_b_to_a <= 60
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    report(capsys, f"ACCEPTANCE 4 PASS: BA/DA sum=60 and bounds exact over "
                   f"{len(moves)} events in {elapsed:.2f}s")


def test_criterion_5_fee_sweep_curve(capsys):
    """The revenue-vs-fee curve has an interior optimum and the MC agrees."""
    cfg = al.SweepConfig()  # the default desk-scale setup, 1e5 trials
    t0 = time.perf_counter()
    result = al.fee_sweep(cfg)
    elapsed = time.perf_counter() - t0
    assert result.expected[0] == 0.0
    assert 0.0 < result.argmax_fee < cfg.fee_max
    at_5pct = int(round((0.05 - cfg.fee_min) / cfg.fee_step))
    assert result.expected[at_5pct] < result.argmax_profit
    assert result.mc[at_5pct] < result.argmax_profit
    for i in range(len(result.fees)):
        assert abs(result.mc[i] - result.expected[i]) <= 3.0 * result.mc_se[i] + 1e-12, \
            f"MC deviates beyond 3 SE at fee {result.fees[i]:.4f}"
    assert elapsed < 60.0
    report(capsys, f"ACCEPTANCE 5 PASS: interior optimum at fee "
                   f"{result.argmax_fee * 100.0:.2f}% (profit "
                   f"{result.argmax_profit:.0f}), MC within 3 SE, {elapsed:.1f}s")


def _paired_batches(kinds, n_paths=100, seed=1006):
    base = al.SimConfig(
        source=al.SyntheticSource(n_paths=n_paths, n_blocks=1440,
                                  regime="high_vol"),
        master_seed=seed,
    )
    out = {}
    for kind in kinds:
        config = dataclasses.replace(base, policy=al.PolicySpec(kind=kind))
        out[kind] = al.run_batch(config)
    return out


def test_criterion_6_oracle_beats_fixed_directionally(capsys):
    """Oracle fees cut informed profit and lift LP markout vs fixed fees."""
    t0 = time.perf_counter()
    batches = _paired_batches(("fx", "ob"))
    fx, ob = batches["fx"].results, batches["ob"].results
    n = len(fx)

    iu_wins = sum(o.iu_mo < f.iu_mo for o, f in zip(ob, fx))
    lp_wins = sum(o.lp_mo > f.lp_mo for o, f in zip(ob, fx))
    iu_p = binomtest(iu_wins, n, 0.5, alternative="greater").pvalue
    lp_p = binomtest(lp_wins, n, 0.5, alternative="greater").pvalue

    assert batches["ob"].mean["iu_mo"] < batches["fx"].mean["iu_mo"]
    assert batches["ob"].mean["lp_mo"] > batches["fx"].mean["lp_mo"]
    assert iu_p < 0.05, f"IU sign test p={iu_p} (wins {iu_wins}/{n})"
    assert lp_p < 0.05, f"LP sign test p={lp_p} (wins {lp_wins}/{n})"
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(capsys, f"ACCEPTANCE 6 PASS: OB vs FX on {n} paired paths, IU wins "
                   f"{iu_wins} (p={iu_p:.2e}), LP wins {lp_wins} "
                   f"(p={lp_p:.2e}), {elapsed:.1f}s")


def test_criterion_7_block_adaptive_soft_check(capsys):
    """Directional BA-vs-FX comparison, recorded rather than enforced."""
    batches = _paired_batches(("fx", "ba"))
    fx_lp = batches["fx"].mean["lp_mo"]
    ba_lp = batches["ba"].mean["lp_mo"]
    outcome = "holds" if ba_lp >= fx_lp else "does not hold"
    report(capsys, f"ACCEPTANCE 7 RECORDED: mean LP MO BA={ba_lp:.0f} vs "
                   f"FX={fx_lp:.0f}; BA >= FX {outcome} on 100 high-vol paths")


def test_criterion_8_gbm_statistical_validity(capsys):
    """Generated log returns match the configured moments; estimator inverts."""
    mu, sigma, n = 0.0002, 0.01, 100_000
    t0 = time.perf_counter()
    series = al.gbm_generate(1.0, mu, sigma, n, al.Stream(1008))
    log_returns = np.diff(np.log(series))
    target_mean = mu - 0.5 * sigma * sigma
    assert abs(log_returns.mean() - target_mean) < 3.0 * sigma / math.sqrt(n)
    assert abs(log_returns.std(ddof=1) - sigma) < 3.0 * sigma / math.sqrt(2 * n)
    mu_hat, sigma_hat = al.gbm_estimate(series)
    assert abs(mu_hat - mu) < 3.0 * sigma / math.sqrt(n)
    assert abs(sigma_hat - sigma) < 3.0 * sigma / math.sqrt(2 * n)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(capsys, f"ACCEPTANCE 8 PASS: GBM moments and estimator round-trip "
                   f"within 3 SE at n={n} in {elapsed:.2f}s")


def test_criterion_9_byte_determinism_under_threads(capsys, tmp_path, monkeypatch):
    """Two identical runs emit byte-identical results, threads and all."""
    monkeypatch.setenv("AMMFEELAB_THREADS", "8")
    args = ["run", "--policies", "fx,ob", "--seed", "1009",
            "--set", "path_source.n_paths=16",
            "--set", "path_source.n_blocks=300"]
    t0 = time.perf_counter()
    blobs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert cli_main(args + ["--out", str(out)]) == 0
        blobs.append((out / "results.csv").read_bytes())
    elapsed = time.perf_counter() - t0
    assert blobs[0] == blobs[1]
    assert elapsed < 60.0
    report(capsys, f"ACCEPTANCE 9 PASS: byte-identical results.csv across "
                   f"runs with 8 worker threads in {elapsed:.1f}s")
