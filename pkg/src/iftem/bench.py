"""Monte-Carlo experiment harness.

One trial is the deterministic pipeline
generate -> encode -> quantize (per scheme) -> decode -> reconstruct -> MSE,
plus exact bit accounting.  Sweeps fan trials over a grid, tolerate
per-row failures, and append mean/std aggregate rows; the compression
table compares the windowed schemes at K-2 bits against the uniform
baseline at K bits, seed by seed.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import codec, decoder, encoder, signals
from .core import TemParams, time_bounds

__all__ = [
    "SCHEMES",
    "BIAS_MODES",
    "TrialConfig",
    "TrialMetrics",
    "TrialError",
    "METRIC_FIELDS",
    "run_trial",
    "make_grid",
    "sweep",
    "baseline_gaps",
    "table1",
    "check_table",
    "emit",
    "load_rows",
]

SCHEMES = ("iftem", "ccif", "dcif")
BIAS_MODES = ("fixed", "alpha")
ROW_KINDS = ("trial", "mean", "std", "error")

# sweep defaults: 20 seeds and these band edges (Hz equivalents) keep a
# desk-scale run in the minutes range; 100 seeds is the full-size setting
DESK_SEEDS = 20
FULL_SEEDS = 100
DESK_OMEGAS_HZ = (5.0, 20.0, 40.0, 80.0)


class TrialError(RuntimeError):
    """A trial failed; the message carries the offending config."""


@dataclass(frozen=True)
class TrialConfig:
    """Everything one trial depends on; hashable so encodes can be cached."""

    omega: float = 2 * math.pi * 60
    energy: float = 0.8
    duration: float | None = 0.13  # None picks a per-omega default
    seed: int = 0
    bias_mode: str = "fixed"
    bias: float = 35.0
    alpha: float = 6.0
    kappa: float = 0.5
    delta: float = 0.075
    scheme: str = "iftem"
    bits: int = 10
    ccif_windows: int | None = None  # None derives L from interval variance
    est_m: int = 40
    est_l: int = 5
    est_L_init: int = 4
    est_L_max: int = 64
    accounting: str = "paper"
    trim_fraction: float = 0.1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.bias_mode not in BIAS_MODES:
            raise ValueError(f"unknown bias mode {self.bias_mode!r}")
        if self.accounting not in codec.ACCOUNTING_MODES:
            raise ValueError(f"unknown accounting mode {self.accounting!r}")
        if not (isinstance(self.bits, int) and self.bits >= 1):
            raise ValueError(f"bits must be a positive integer, got {self.bits}")

    @property
    def levels(self) -> int:
        return 2 ** self.bits

    @property
    def resolved_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        # at least ~10.5 kernel spacings so generation is valid at low omega
        return max(0.13, 10.5 * math.pi / self.omega)

    def tem_params(self, c: float) -> TemParams:
        if self.bias_mode == "alpha":
            return TemParams.from_alpha(self.alpha, c, self.kappa, self.delta)
        return TemParams(bias=self.bias, kappa=self.kappa, delta=self.delta)


@dataclass
class TrialMetrics:
    """One result row; field order is the CSV schema."""

    kind: str = "trial"
    scheme: str = ""
    bias_mode: str = ""
    omega: float = math.nan
    bits: int = 0
    seed: int = 0
    mse_db: float = math.nan
    total_bits: float = math.nan
    residual_bits: float = math.nan
    window_bits: float = math.nan
    flag_bits: float = math.nan
    overhead_percent: float = math.nan
    avg_window_count: float = math.nan
    firing_count: float = math.nan
    oversampling: float = math.nan
    duration: float = math.nan
    energy: float = math.nan
    error: str = ""


METRIC_FIELDS = [f.name for f in dataclasses.fields(TrialMetrics)]
_AGGREGATE_FIELDS = (
    "mse_db", "total_bits", "residual_bits", "window_bits", "flag_bits",
    "overhead_percent", "avg_window_count", "firing_count", "oversampling",
)

# generate+encode is the expensive, scheme-independent half of a trial;
# cache it per worker keyed by the fields it depends on
_ENCODE_CACHE: dict = {}
_ENCODE_CACHE_CAP = 128


def _encode_key(cfg: TrialConfig) -> tuple:
    return (cfg.omega, cfg.energy, cfg.resolved_duration, cfg.seed,
            cfg.bias_mode, cfg.bias, cfg.alpha, cfg.kappa, cfg.delta)


def _signal_and_firing(cfg: TrialConfig):
    key = _encode_key(cfg)
    hit = _ENCODE_CACHE.get(key)
    if hit is not None:
        return hit
    sig = signals.generate(cfg.omega, cfg.energy, cfg.resolved_duration, cfg.seed)
    params = cfg.tem_params(sig.amplitude_bound)
    fs = encoder.encode(sig, params)
    bounds = time_bounds(params, sig.amplitude_bound)
    if len(_ENCODE_CACHE) >= _ENCODE_CACHE_CAP:
        _ENCODE_CACHE.pop(next(iter(_ENCODE_CACHE)))
    _ENCODE_CACHE[key] = (sig, params, fs, bounds)
    return sig, params, fs, bounds


def run_trial(cfg: TrialConfig) -> TrialMetrics:
    """Run the full pipeline for one config; deterministic in the config."""
    try:
        return _run_trial_inner(cfg)
    except Exception as exc:
        raise TrialError(f"trial failed for {cfg}: {exc}") from exc


def _run_trial_inner(cfg: TrialConfig) -> TrialMetrics:
    sig, params, fs, bounds = _signal_and_firing(cfg)
    levels = cfg.levels

    if cfg.scheme == "iftem":
        stream = codec.uniform_encode(fs, levels, bounds)
    elif cfg.scheme == "ccif":
        windows = cfg.ccif_windows
        if windows is None:
            if len(fs) >= 2:
                _, variance = codec.running_stats(fs.intervals)
            else:
                variance = 0.0
            windows = codec.const_window_count(variance, bounds, cfg.est_L_max)
        stream = codec.ccif_encode(fs, windows, levels, bounds)
    else:
        est = codec.EstimatorState(m=cfg.est_m, l=cfg.est_l,
                                   L_init=cfg.est_L_init, L_max=cfg.est_L_max)
        stream = codec.dcif_encode(fs, levels, est, bounds)

    decoded = codec.decode_stream(stream)
    t_hat = decoder.firing_times(fs.t0, decoded)
    rcfg = decoder.ReconstructionConfig(omega=cfg.omega,
                                        trim_fraction=cfg.trim_fraction)
    gs = rcfg.resolved_grid_spacing
    duration = cfg.resolved_duration
    grid = np.arange(0.0, duration + 0.5 * gs, gs)
    rec = decoder.reconstruct(t_hat, params, rcfg, grid=grid,
                              c=sig.amplitude_bound)
    truth = sig.evaluate(grid)
    mse = decoder.mse_db(truth, rec.values, spacing=gs,
                         trim_fraction=cfg.trim_fraction)
    report = codec.bit_cost(stream, cfg.accounting)
    avg_count = float(np.mean(stream.window_counts)) if len(stream) else 1.0
    return TrialMetrics(
        kind="trial",
        scheme=cfg.scheme,
        bias_mode=cfg.bias_mode,
        omega=cfg.omega,
        bits=cfg.bits,
        seed=cfg.seed,
        mse_db=mse,
        total_bits=float(report.total_bits),
        residual_bits=float(report.residual_bits),
        window_bits=float(report.window_bits),
        flag_bits=float(report.flag_bits),
        overhead_percent=report.overhead_percent,
        avg_window_count=avg_count,
        firing_count=float(len(fs) + 1),
        oversampling=encoder.oversampling_factor(fs, cfg.omega),
        duration=duration,
        energy=cfg.energy,
    )


def _safe_trial(cfg: TrialConfig) -> TrialMetrics:
    try:
        return run_trial(cfg)
    except Exception as exc:
        return TrialMetrics(kind="error", scheme=cfg.scheme,
                            bias_mode=cfg.bias_mode, omega=cfg.omega,
                            bits=cfg.bits, seed=cfg.seed,
                            duration=cfg.resolved_duration, energy=cfg.energy,
                            error=str(exc))


def make_grid(base: TrialConfig | None = None, bits=range(6, 16),
              schemes=SCHEMES, seeds=range(DESK_SEEDS), omegas=None,
              modes=("fixed",)) -> list:
    """Cartesian trial grid in a stable order (mode, omega, scheme, bits, seed)."""
    base = base if base is not None else TrialConfig()
    omegas = list(omegas) if omegas is not None else [base.omega]
    grid = []
    for mode in modes:
        for omega in omegas:
            for scheme in schemes:
                for b in bits:
                    for seed in seeds:
                        grid.append(replace(base, bias_mode=mode, omega=omega,
                                            scheme=scheme, bits=b, seed=seed))
    return grid


def sweep(configs, workers: int = 1) -> list:
    """Run every config; failures become error rows, aggregates are appended.

    Output: one row per config in input order, then mean and std rows per
    (scheme, bias_mode, omega, bits) group, in first-seen order.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("empty trial grid")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_safe_trial, configs, chunksize=4))
    else:
        rows = [_safe_trial(cfg) for cfg in configs]
    return rows + aggregate(rows)


def aggregate(rows) -> list:
    """Mean and std rows (population std) over seeds per group."""
    groups: dict = {}
    for row in rows:
        if row.kind != "trial":
            continue
        key = (row.scheme, row.bias_mode, row.omega, row.bits)
        groups.setdefault(key, []).append(row)
    out = []
    for (scheme, mode, omega, bits), members in groups.items():
        for kind, stat in (("mean", np.mean), ("std", np.std)):
            agg = TrialMetrics(kind=kind, scheme=scheme, bias_mode=mode,
                               omega=omega, bits=bits, seed=-1,
                               duration=members[0].duration,
                               energy=members[0].energy)
            for name in _AGGREGATE_FIELDS:
                setattr(agg, name,
                        float(stat([getattr(m, name) for m in members])))
            out.append(agg)
    return out


def baseline_gaps(rows, schemes=("ccif", "dcif")) -> list:
    """Per-trial MSE gap of each windowed scheme against the uniform baseline
    at matched total bits.

    For every (bias_mode, omega, seed) the baseline's (total_bits, mse)
    curve is interpolated at the windowed trial's total bit cost; the gap
    is mse_scheme - mse_baseline_interp.  Returns dict rows.
    """
    base_curves: dict = {}
    for row in rows:
        if row.kind == "trial" and row.scheme == "iftem":
            key = (row.bias_mode, row.omega, row.seed)
            base_curves.setdefault(key, []).append((row.total_bits, row.mse_db))
    for key, pts in base_curves.items():
        pts.sort()
        base_curves[key] = (np.array([p[0] for p in pts]),
                            np.array([p[1] for p in pts]))
    gaps = []
    for row in rows:
        if row.kind != "trial" or row.scheme not in schemes:
            continue
        key = (row.bias_mode, row.omega, row.seed)
        if key not in base_curves:
            continue
        xs, ys = base_curves[key]
        interp = float(np.interp(row.total_bits, xs, ys))
        gaps.append({
            "scheme": row.scheme, "bias_mode": row.bias_mode,
            "omega": row.omega, "bits": row.bits, "seed": row.seed,
            "gap_db": row.mse_db - interp,
        })
    return gaps


def table1(seeds=range(DESK_SEEDS), cif_bits=range(6, 14), bit_gap: int = 2,
           schemes=("dcif", "ccif"), base: TrialConfig | None = None,
           workers: int = 1) -> list:
    """Windowed schemes at K-2 bits against the uniform baseline at K bits.

    Returns one dict row per bit pairing with per-scheme mean MSE, the MSE
    difference to the baseline, and the mean per-seed bit compression
    percentage 100*(1 - bits_scheme/bits_baseline).
    """
    base = base if base is not None else TrialConfig(duration=0.1)
    seeds = list(seeds)
    cif_bits = list(cif_bits)
    if not seeds or not cif_bits:
        raise ValueError("empty table grid")
    baseline_bits = [k + bit_gap for k in cif_bits]
    configs = make_grid(base, bits=sorted(set(baseline_bits)),
                        schemes=("iftem",), seeds=seeds,
                        modes=(base.bias_mode,))
    for scheme in schemes:
        configs += make_grid(base, bits=cif_bits, schemes=(scheme,),
                             seeds=seeds, modes=(base.bias_mode,))
    rows = sweep(configs, workers=workers)
    trials = {}
    for row in rows:
        if row.kind == "error":
            raise TrialError(f"table trial failed: {row.error}")
        if row.kind == "trial":
            trials[(row.scheme, row.bits, row.seed)] = row

    out = []
    for k, k_base in zip(cif_bits, baseline_bits):
        base_rows = [trials[("iftem", k_base, s)] for s in seeds]
        entry = {
            "cif_bits": k,
            "if_bits": k_base,
            "mse_iftem": float(np.mean([r.mse_db for r in base_rows])),
        }
        for scheme in schemes:
            scheme_rows = [trials[(scheme, k, s)] for s in seeds]
            entry[f"mse_{scheme}"] = float(
                np.mean([r.mse_db for r in scheme_rows]))
            entry[f"mse_diff_{scheme}"] = (
                entry[f"mse_{scheme}"] - entry["mse_iftem"])
            entry[f"compression_{scheme}"] = float(np.mean([
                100.0 * (1.0 - s_row.total_bits / b_row.total_bits)
                for s_row, b_row in zip(scheme_rows, base_rows)
            ]))
        out.append(entry)
    return out


def check_table(rows, schemes=("dcif", "ccif"), mse_tol_db: float = 2.0,
                compression_band=(8.0, 23.0)) -> list:
    """Violation messages for the compression-table expectations; empty = pass."""
    problems = []
    lo, hi = compression_band
    for scheme in schemes:
        comps = [row[f"compression_{scheme}"] for row in rows]
        for row in rows:
            label = f"{scheme} row ({row['cif_bits']},{row['if_bits']})"
            diff = row[f"mse_diff_{scheme}"]
            if abs(diff) > mse_tol_db:
                problems.append(f"{label}: |MSE diff| {abs(diff):.2f} dB > {mse_tol_db}")
            comp = row[f"compression_{scheme}"]
            if not lo <= comp <= hi:
                problems.append(
                    f"{label}: compression {comp:.2f}% outside [{lo}, {hi}]")
        for a, b in zip(comps, comps[1:]):
            if not b < a:
                problems.append(
                    f"{scheme}: compression column not strictly decreasing "
                    f"({a:.2f} -> {b:.2f})")
    return problems


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(rows, path, fmt: str = "csv") -> Path:
    """Write rows as CSV, or a standalone plot script for a sweep CSV.

    Rows may be TrialMetrics or plain dicts (column order follows the
    first row).  The plot script expects the CSV beside it, same stem.
    """
    path = Path(path)
    if fmt == "csv":
        if rows and not isinstance(rows[0], dict):
            names = METRIC_FIELDS
            dicts = [dataclasses.asdict(r) for r in rows]
        elif rows:
            names = list(rows[0].keys())
            dicts = rows
        else:
            names = METRIC_FIELDS
            dicts = []
        lines = [",".join(names)]
        lines.extend(
            ",".join(_format_value(d[name]) for name in names) for d in dicts
        )
        try:
            path.write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return path
    if fmt == "plot-script":
        script = _PLOT_SCRIPT.replace("__CSV__", path.stem + ".csv")
        target = path if path.suffix == ".py" else path.with_suffix(".py")
        try:
            target.write_text(script)
        except OSError as exc:
            raise OSError(f"cannot write {target}: {exc}") from exc
        return target
    raise ValueError(f"unknown emit format {fmt!r}")


def load_rows(path) -> list:
    """Read an emitted CSV back as dicts with numbers parsed."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"empty CSV: {path}")
    names = lines[0].split(",")
    out = []
    for line in lines[1:]:
        row = {}
        for name, cell in zip(names, line.split(",")):
            row[name] = _parse_cell(cell)
        out.append(row)
    return out


def _parse_cell(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


_PLOT_SCRIPT = '''#!/usr/bin/env python
"""Render MSE-vs-bits curves and window overhead from a sweep CSV."""

import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = Path(sys.argv[1]) if len(sys.argv) > 1 else \\
    Path(__file__).with_name("__CSV__")

rows = []
with open(csv_path, newline="") as fh:
    for row in csv.DictReader(fh):
        if row["kind"] == "mean":
            rows.append(row)

groups = {}
for row in rows:
    key = (row["scheme"], row["bias_mode"], float(row["omega"]))
    groups.setdefault(key, []).append(
        (int(row["bits"]), float(row["mse_db"]),
         float(row["overhead_percent"])))

fig, ax = plt.subplots(figsize=(7, 4.5))
for (scheme, mode, omega), pts in sorted(groups.items()):
    pts.sort()
    label = f"{scheme} ({mode}, {omega / 6.283185307179586:.0f} Hz)"
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
ax.set_xlabel("bits per residual code")
ax.set_ylabel("MSE [dB]")
ax.grid(True, alpha=0.4)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(csv_path.with_name(csv_path.stem + "_mse.png"), dpi=150)

fig, ax = plt.subplots(figsize=(7, 4.5))
for (scheme, mode, omega), pts in sorted(groups.items()):
    if scheme == "iftem":
        continue
    pts.sort()
    label = f"{scheme} ({mode}, {omega / 6.283185307179586:.0f} Hz)"
    ax.plot([p[0] for p in pts], [p[2] for p in pts], marker="s", label=label)
ax.set_xlabel("bits per residual code")
ax.set_ylabel("window overhead [% of residual bits]")
ax.grid(True, alpha=0.4)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(csv_path.with_name(csv_path.stem + "_overhead.png"), dpi=150)
print(f"figures written beside {csv_path}")
'''
