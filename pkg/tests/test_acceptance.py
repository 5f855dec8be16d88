"""End-to-end acceptance checks for the whole pipeline.

Each criterion is one test; it prints a single PASS line with the measured
margin (visible under pytest -s, while -v carries the per-test verdict).
Shared grids are session fixtures so the expensive runs happen once.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import simpson

from iftem import bench, codec, decoder, encoder, signals
from iftem.core import amplitude_bound, ccif_step, iftem_step, time_bounds

OMEGA = 2 * math.pi * 60
ENERGY = 0.8
DURATION = 0.13
MODES = ("fixed", "alpha")


def _line(num: int, name: str, detail: str) -> None:
    print(f"criterion {num:02d} {name}: PASS ({detail})")


@pytest.fixture(scope="session")
def encode_pool():
    """100 encoded signals: 50 seeds per bias mode at the sweep band."""
    c = amplitude_bound(ENERGY, OMEGA)
    pool = []
    for mode in MODES:
        params = bench.TrialConfig(bias_mode=mode).tem_params(c)
        for seed in range(50):
            sig = signals.generate(OMEGA, ENERGY, DURATION, seed=seed)
            pool.append((mode, seed, sig, encoder.encode(sig, params), params))
    return pool


@pytest.fixture(scope="session")
def sweep_rows():
    grid = bench.make_grid(bits=range(6, 16), schemes=bench.SCHEMES,
                           seeds=range(20), modes=MODES)
    return bench.sweep(grid)


@pytest.fixture(scope="session")
def table_result():
    start = time.monotonic()
    rows = bench.table1(seeds=range(20))
    return rows, time.monotonic() - start


def test_criterion_01_conservation(encode_pool):
    worst = 0.0
    for _, _, sig, fs, params in encode_pool:
        times = fs.times()
        grid = np.linspace(times[0], times[-1], 20001)
        integral = simpson(sig.evaluate(grid), x=grid)
        lhs = len(fs) * params.kappa_delta
        rhs = params.bias * (times[-1] - times[0]) + integral
        worst = max(worst, abs(lhs - rhs) / lhs)
    assert worst <= 1e-8
    _line(1, "conservation", f"worst relative residual {worst:.2e} "
                             f"over {len(encode_pool)} signals")


def test_criterion_02_interval_bounds(encode_pool):
    worst = 0.0
    for _, _, sig, fs, params in encode_pool:
        bounds = time_bounds(params, sig.amplitude_bound)
        low = (bounds.dt_min - fs.intervals) / bounds.dt_min
        high = (fs.intervals - bounds.dt_max) / bounds.dt_max
        worst = max(worst, float(low.max()), float(high.max()))
    assert worst <= 1e-9
    _line(2, "interval bounds", f"worst relative excursion {worst:.2e}")


def test_criterion_03_step_identities():
    c = amplitude_bound(ENERGY, OMEGA)
    params = bench.TrialConfig().tem_params(c)
    spread = time_bounds(params, c).spread
    checked = 0
    for levels in (2 ** k for k in range(6, 16)):
        base = iftem_step(params, c, levels)
        assert math.isclose(base, spread / levels, rel_tol=1e-12)
        for windows in range(1, 65):
            refined = ccif_step(params, c, levels, windows)
            assert math.isclose(windows * refined, base, rel_tol=1e-12)
            if windows > 1:
                assert refined < base
            if levels % windows == 0:
                c1 = ccif_step(params, c, levels // windows, windows)
                assert math.isclose(c1, base, rel_tol=1e-12)
            checked += 1
    _line(3, "step identities", f"{checked} (levels, windows) pairs exact")


def test_criterion_04_popoviciu(encode_pool):
    worst_ratio = 0.0
    for _, _, sig, fs, params in encode_pool:
        bounds = time_bounds(params, sig.amplitude_bound)
        cap = (bounds.spread / 2) ** 2
        for m in (2, 3, 5, 10, 40):
            view = np.lib.stride_tricks.sliding_window_view(fs.intervals, m)
            variances = view.var(axis=1)
            assert float(variances.max()) < cap
            worst_ratio = max(worst_ratio, float(variances.max()) / cap)
    _line(4, "popoviciu", f"max variance at {worst_ratio:.3f} of the bound")


def test_criterion_05_perfect_recovery(encode_pool):
    start = time.monotonic()
    subset = [entry for entry in encode_pool
              if entry[1] < 10]  # 10 per bias mode
    assert len(subset) == 20
    worst = -math.inf
    for _, _, sig, fs, params in subset:
        cfg = decoder.ReconstructionConfig(omega=sig.omega)
        gs = cfg.resolved_grid_spacing
        grid = np.arange(0.0, sig.duration + gs / 2, gs)
        rec = decoder.reconstruct(fs.times(), params, cfg, grid=grid,
                                  c=sig.amplitude_bound)
        worst = max(worst, decoder.mse_db(sig.evaluate(grid), rec.values,
                                          spacing=gs))
    elapsed = time.monotonic() - start
    assert worst <= -40.0
    assert elapsed < 120.0
    _line(5, "perfect recovery",
          f"worst {worst:.1f} dB over 20 signals in {elapsed:.1f}s")


def test_criterion_06_mse_improvement(sweep_rows):
    gaps = bench.baseline_gaps(sweep_rows)
    groups: dict = {}
    for g in gaps:
        if 8 <= g["bits"] <= 12:
            key = (g["bias_mode"], g["scheme"], g["bits"])
            groups.setdefault(key, []).append(g["gap_db"])
    assert len(groups) == len(MODES) * 2 * 5
    means = {key: float(np.mean(v)) for key, v in groups.items()}
    for key, mean in means.items():
        assert -25.0 <= mean <= -3.0, (key, mean)
    lo, hi = min(means.values()), max(means.values())
    _line(6, "mse improvement", f"mean gaps in [{lo:.1f}, {hi:.1f}] dB "
                                f"across {len(means)} (mode, scheme, bits)")


def test_criterion_07_bit_savings(table_result):
    rows, elapsed = table_result
    problems = bench.check_table(rows)
    assert problems == []
    assert elapsed < 600.0
    comps = [row["compression_ccif"] for row in rows]
    _line(7, "bit savings", f"{len(rows)} rows, ccif compression "
                            f"{comps[0]:.1f}% -> {comps[-1]:.1f}% "
                            f"in {elapsed:.1f}s")


def test_criterion_08_overhead(sweep_rows):
    windowed = [r for r in sweep_rows
                if r.kind == "trial" and r.bias_mode == "fixed"
                and r.scheme != "iftem"]
    mean_overhead = float(np.mean([r.overhead_percent for r in windowed]))
    dcif_counts = [r.avg_window_count for r in windowed if r.scheme == "dcif"]
    mean_count = float(np.mean(dcif_counts))
    assert mean_overhead <= 7.0
    assert 2.0 <= mean_count <= 8.0
    _line(8, "overhead", f"mean window overhead {mean_overhead:.2f}%, "
                         f"dcif mean L {mean_count:.2f}")


def test_criterion_09_scheme_ordering(sweep_rows):
    means = {(r.scheme, r.bits): r.mse_db for r in sweep_rows
             if r.kind == "mean" and r.bias_mode == "fixed"}
    margins = []
    for bits in range(6, 16):
        margin = means[("ccif", bits)] - means[("dcif", bits)]
        assert margin <= 0.5, (bits, margin)
        margins.append(margin)
    _line(9, "scheme ordering",
          f"ccif-dcif margin at worst {max(margins):+.2f} dB (cap +0.5)")


def test_criterion_10_codec_roundtrip(encode_pool):
    subset = [entry for entry in encode_pool if entry[1] < 10]
    levels = 256
    worst = 0.0
    for _, _, sig, fs, params in subset:
        bounds = time_bounds(params, sig.amplitude_bound)
        streams = (codec.uniform_encode(fs, levels),
                   codec.ccif_encode(fs, windows=4, levels=levels),
                   codec.dcif_encode(fs, levels))
        for cs in streams:
            replayed = codec.replay_window_counts(cs)
            assert replayed == cs.window_counts
            decoded = codec.decode_stream(cs)
            steps = bounds.spread / (np.array(replayed) * levels)
            err = np.abs(decoded - fs.intervals)
            assert np.all(err <= steps / 2 * (1 + 1e-9))
            worst = max(worst, float((err / (steps / 2)).max()))
            blob = codec.write_stream(cs)
            assert codec.write_stream(codec.read_stream(blob)) == blob
    _line(10, "codec roundtrip",
          f"worst |error| at {worst:.3f} of step/2; "
          f"60 streams re-serialize bit-exact")
