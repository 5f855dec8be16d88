"""Command-line interface.

Subcommands: encode, decode, trial, sweep, table1.  Options may come from
a flat key=value config file (--config); explicit flags win over the file,
the file wins over built-in defaults.  Every experiment run writes its
resolved configuration beside its outputs.

Band edges are given in Hz by default and converted by 2*pi; pass
--omega-unit rad to supply rad/s directly.  Quantizer size is given as
bits, so the level count is a power of two by construction.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

from . import bench, codec, decoder, encoder, report, signals
from .core import TemParams, time_bounds
from .errors import IftemError

_TWO_PI = 2 * math.pi
ENV_OUTPUT_DIR = "IFTEM_OUTPUT_DIR"

# dest -> converter used when the value comes from a config file
_CONFIG_TYPES: dict = {}


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(spec: str) -> list:
    """Comma-separated integers; a:b tokens are inclusive ranges."""
    out = []
    for token in str(spec).split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            lo, hi = token.split(":", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(token))
    if not out:
        raise ValueError(f"empty integer list {spec!r}")
    return out


def _parse_float_list(spec: str) -> list:
    out = [float(tok) for tok in str(spec).split(",") if tok.strip()]
    if not out:
        raise ValueError(f"empty number list {spec!r}")
    return out


def _parse_name_list(spec: str) -> list:
    out = [tok.strip() for tok in str(spec).split(",") if tok.strip()]
    if not out:
        raise ValueError(f"empty name list {spec!r}")
    return out


def _check_bits(bits: int) -> int:
    if not 1 <= bits <= 15:
        raise ValueError(f"bits must lie in [1, 15], got {bits}")
    return bits


def _omega_rad(value: float, unit: str) -> float:
    return value * _TWO_PI if unit == "hz" else value


def _add(parser, *flags, conv=None, **kw):
    suppress = kw.pop("suppress", False)
    if suppress and "default" in kw:
        kw["default"] = argparse.SUPPRESS
    arg = parser.add_argument(*flags, **kw)
    if conv is not None:
        _CONFIG_TYPES[arg.dest] = conv
    elif kw.get("action") in ("store_true", "store_false"):
        _CONFIG_TYPES[arg.dest] = _parse_bool
    elif kw.get("type") is not None:
        _CONFIG_TYPES[arg.dest] = kw["type"]
    else:
        _CONFIG_TYPES.setdefault(arg.dest, str)
    return arg


def _add_signal_opts(p, s):
    _add(p, "--omega", type=float, default=60.0, suppress=s,
         help="band edge (Hz unless --omega-unit rad)")
    _add(p, "--omega-unit", choices=("hz", "rad"), default="hz", suppress=s,
         help="unit of --omega/--omegas (default hz)")
    _add(p, "--energy", type=float, default=0.8, suppress=s,
         help="signal energy over the support")
    _add(p, "--duration", type=float, default=None, suppress=s,
         help="signal support in seconds (default: per-band auto)")
    _add(p, "--seed", type=int, default=0, suppress=s, help="signal seed")


def _add_tem_opts(p, s):
    _add(p, "--bias-mode", choices=bench.BIAS_MODES, default="fixed",
         suppress=s, help="fixed bias value or bias proportional to the bound")
    _add(p, "--bias", type=float, default=35.0, suppress=s,
         help="integrator bias (fixed mode)")
    _add(p, "--alpha", type=float, default=6.0, suppress=s,
         help="bias/bound ratio (alpha mode)")
    _add(p, "--kappa", type=float, default=0.5, suppress=s, help="integrator scale")
    _add(p, "--delta", type=float, default=0.075, suppress=s,
         help="firing threshold")


def _add_scheme_opts(p, s, single_bits: bool):
    _add(p, "--scheme", choices=bench.SCHEMES, default="iftem", suppress=s,
         help="quantization scheme")
    if single_bits:
        _add(p, "--bits", type=int, default=10, suppress=s,
             help="residual bits per sample (levels = 2^bits)")
    else:
        _add(p, "--bits", default="6:15", suppress=s, conv=str,
             help="bit list, e.g. 6:15 or 6,8,10")
    _add(p, "--windows", type=int, default=None, suppress=s,
         help="fixed window count override for the ccif scheme")
    _add(p, "--est-m", dest="est_m", type=int, default=40, suppress=s,
         help="estimator buffer length")
    _add(p, "--est-l", dest="est_l", type=int, default=5, suppress=s,
         help="estimator update cadence")
    _add(p, "--est-l-init", dest="est_L_init", type=int, default=4, suppress=s,
         help="initial window count")
    _add(p, "--est-l-max", dest="est_L_max", type=int, default=64, suppress=s,
         help="window count cap")
    _add(p, "--accounting", choices=codec.ACCOUNTING_MODES, default="paper",
         suppress=s, help="bit accounting mode")
    _add(p, "--trim-fraction", type=float, default=0.1, suppress=s,
         help="boundary fraction excluded from the MSE")


def _add_output_opts(p, s, prefix: str):
    _add(p, "--outdir", default=None, suppress=s,
         help=f"output directory (default ${ENV_OUTPUT_DIR} or cwd)")
    _add(p, "--prefix", default=prefix, suppress=s, help="output file stem")
    _add(p, "--workers", type=int, default=1, suppress=s,
         help="parallel trial workers")


def _make_parser(suppress: bool) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iftem",
        description="Integrate-and-fire time encoding: simulate, compress, "
                    "reconstruct, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode a signal into a compressed stream")
    _add(p, "--config", default=None, suppress=suppress)
    _add_signal_opts(p, suppress)
    _add_tem_opts(p, suppress)
    _add_scheme_opts(p, suppress, single_bits=True)
    _add(p, "--signal", default=None, suppress=suppress,
         help="load the signal from this CSV instead of generating")
    _add(p, "--out", required=True, help="output stream path")
    _add(p, "--intervals-csv", dest="intervals_csv", default=None,
         suppress=suppress, help="also dump the raw firing sequence CSV here")

    p = sub.add_parser("decode", help="decode a stream, optionally reconstruct")
    _add(p, "--config", default=None, suppress=suppress)
    _add(p, "stream", help="input stream path")
    _add(p, "--out", default=None, suppress=suppress,
         help="CSV path for the decoded intervals")
    _add(p, "--reconstruct", default=None, suppress=suppress,
         help="write the reconstructed signal CSV here")
    _add(p, "--omega", type=float, default=None, suppress=suppress,
         help="band edge for reconstruction (Hz unless --omega-unit rad)")
    _add(p, "--omega-unit", choices=("hz", "rad"), default="hz", suppress=suppress)
    _add(p, "--grid-spacing", dest="grid_spacing", type=float, default=None,
         suppress=suppress, help="reconstruction grid spacing in seconds")
    _add(p, "--signal", default=None, suppress=suppress,
         help="ground-truth signal CSV; prints the reconstruction MSE")

    p = sub.add_parser("trial", help="run one trial and print its metrics")
    _add(p, "--config", default=None, suppress=suppress)
    _add_signal_opts(p, suppress)
    _add_tem_opts(p, suppress)
    _add_scheme_opts(p, suppress, single_bits=True)
    _add_output_opts(p, suppress, "trial")
    _add(p, "--save", action="store_true", suppress=suppress,
         help="write the row CSV and resolved config to the output directory")

    p = sub.add_parser("sweep", help="Monte-Carlo sweep with figures")
    _add(p, "--config", default=None, suppress=suppress)
    _add_signal_opts(p, suppress)
    _add_tem_opts(p, suppress)
    _add_scheme_opts(p, suppress, single_bits=False)
    _add_output_opts(p, suppress, "sweep")
    _add(p, "--omegas", default=None, suppress=suppress, conv=str,
         help="band edges, e.g. 5,20,40,80 (default; Hz unless --omega-unit rad)")
    _add(p, "--schemes", default="iftem,ccif,dcif", suppress=suppress, conv=str)
    _add(p, "--modes", default="fixed", suppress=suppress, conv=str,
         help="bias modes to run, e.g. fixed,alpha")
    _add(p, "--seeds", type=int, default=bench.DESK_SEEDS, suppress=suppress,
         help="number of seeds (0..n-1)")
    _add(p, "--full", action="store_true", suppress=suppress,
         help=f"use the full {bench.FULL_SEEDS}-seed setting")

    p = sub.add_parser("table1", help="bit-compression table at K-2 vs K bits")
    _add(p, "--config", default=None, suppress=suppress)
    _add_signal_opts(p, suppress)
    _add_tem_opts(p, suppress)
    _add_scheme_opts(p, suppress, single_bits=True)
    _add_output_opts(p, suppress, "table1")
    _add(p, "--cif-bits", dest="cif_bits", default="6:13", suppress=suppress,
         conv=str, help="windowed-scheme bit settings (baseline runs at +gap)")
    _add(p, "--bit-gap", dest="bit_gap", type=int, default=2, suppress=suppress)
    _add(p, "--schemes", default="dcif,ccif", suppress=suppress, conv=str)
    _add(p, "--seeds", type=int, default=bench.DESK_SEEDS, suppress=suppress)
    _add(p, "--no-check", dest="no_check", action="store_true", suppress=suppress,
         help="skip the compression-band checks")
    return parser


def _apply_config(args, given: set, path: str) -> None:
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
        if dest in given:
            continue  # explicit flag wins
        conv = _CONFIG_TYPES.get(dest, str)
        if value.lower() == "none" or value == "":
            setattr(args, dest, None)
        else:
            setattr(args, dest, conv(value))


def _write_config(path: Path, mapping: dict) -> None:
    lines = []
    for key in sorted(mapping):
        value = mapping[key]
        if value is None or key in ("command", "config"):
            continue
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, (list, tuple)):
            value = ",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in value)
        lines.append(f"{key}={value}")
    path.write_text("\n".join(lines) + "\n")


def _outdir(args) -> Path:
    root = args.outdir or os.environ.get(ENV_OUTPUT_DIR) or "."
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolved_args(args, **overrides) -> dict:
    mapping = dict(vars(args))
    mapping.update(overrides)
    return mapping


def _trial_config(args, omega: float) -> bench.TrialConfig:
    return bench.TrialConfig(
        omega=omega,
        energy=args.energy,
        duration=args.duration,
        seed=args.seed,
        bias_mode=args.bias_mode,
        bias=args.bias,
        alpha=args.alpha,
        kappa=args.kappa,
        delta=args.delta,
        scheme=args.scheme,
        bits=_check_bits(args.bits),
        ccif_windows=args.windows,
        est_m=args.est_m,
        est_l=args.est_l,
        est_L_init=args.est_L_init,
        est_L_max=args.est_L_max,
        accounting=args.accounting,
        trim_fraction=args.trim_fraction,
    )


def _base_config(args) -> bench.TrialConfig:
    # scheme/bits/seed are grid dimensions; omega placeholder is overridden
    return bench.TrialConfig(
        energy=args.energy,
        duration=args.duration,
        bias_mode=args.bias_mode,
        bias=args.bias,
        alpha=args.alpha,
        kappa=args.kappa,
        delta=args.delta,
        ccif_windows=args.windows,
        est_m=args.est_m,
        est_l=args.est_l,
        est_L_init=args.est_L_init,
        est_L_max=args.est_L_max,
        accounting=args.accounting,
        trim_fraction=args.trim_fraction,
    )


def cmd_encode(args) -> int:
    omega = _omega_rad(args.omega, args.omega_unit)
    if args.signal:
        sig = signals.load_signal(args.signal)
        omega = sig.omega
    else:
        duration = (args.duration if args.duration is not None
                    else max(0.13, 10.5 * math.pi / omega))
        sig = signals.generate(omega, args.energy, duration, args.seed)
    if args.bias_mode == "alpha":
        params = TemParams.from_alpha(args.alpha, sig.amplitude_bound,
                                      args.kappa, args.delta)
    else:
        params = TemParams(bias=args.bias, kappa=args.kappa, delta=args.delta)
    fs = encoder.encode(sig, params)
    bounds = time_bounds(params, sig.amplitude_bound)
    levels = 2 ** _check_bits(args.bits)
    if args.scheme == "iftem":
        stream = codec.uniform_encode(fs, levels, bounds)
    elif args.scheme == "ccif":
        windows = args.windows
        if windows is None:
            _, variance = codec.running_stats(fs.intervals) if len(fs) >= 2 \
                else (0.0, 0.0)
            windows = codec.const_window_count(variance, bounds, args.est_L_max)
        stream = codec.ccif_encode(fs, windows, levels, bounds)
    else:
        est = codec.EstimatorState(m=args.est_m, l=args.est_l,
                                   L_init=args.est_L_init, L_max=args.est_L_max)
        stream = codec.dcif_encode(fs, levels, est, bounds)
    if args.accounting == "self-delimiting":
        stream.header = dataclasses.replace(stream.header, self_delimiting=True)
    codec.write_stream(stream, args.out)
    if args.intervals_csv:
        encoder.save_firing(fs, args.intervals_csv)
    rep = codec.bit_cost(stream, args.accounting)
    print(f"encoded {len(fs)} intervals ({len(fs) + 1} firings) "
          f"-> {args.out}")
    print(f"scheme={args.scheme} levels={levels} "
          f"avg_windows={sum(stream.window_counts) / max(len(stream), 1):.2f}")
    print(f"bits: total={rep.total_bits} residual={rep.residual_bits} "
          f"window={rep.window_bits} flag={rep.flag_bits} "
          f"overhead={rep.overhead_percent:.2f}% [{rep.accounting}]")
    return 0


def cmd_decode(args) -> int:
    stream = codec.read_stream(args.stream)
    values = codec.decode_stream(stream)
    print(f"decoded {len(values)} intervals "
          f"(mode={stream.header.mode}, levels={stream.header.levels})")
    if args.out:
        codec.dump_intervals(values, args.out)
        print(f"intervals -> {args.out}")
    if args.reconstruct:
        if args.omega is None:
            raise ValueError("--reconstruct requires --omega")
        if stream.header.params is None:
            raise ValueError("stream header carries no sampler parameters")
        omega = _omega_rad(args.omega, args.omega_unit)
        rcfg = decoder.ReconstructionConfig(omega=omega,
                                            grid_spacing=args.grid_spacing)
        times = decoder.firing_times(stream.header.t0, values)
        rec = decoder.reconstruct(times, stream.header.params, rcfg)
        decoder.save_reconstruction(rec, args.reconstruct)
        print(f"reconstruction -> {args.reconstruct}")
        if args.signal:
            sig = signals.load_signal(args.signal)
            truth = sig.evaluate(rec.times)
            mse = decoder.mse_db(truth, rec.values,
                                 spacing=rcfg.resolved_grid_spacing)
            print(f"mse_db={mse:.2f}")
    return 0


def cmd_trial(args) -> int:
    omega = _omega_rad(args.omega, args.omega_unit)
    cfg = _trial_config(args, omega)
    row = bench.run_trial(cfg)
    for name in bench.METRIC_FIELDS:
        print(f"{name}={getattr(row, name)}")
    if args.save:
        outdir = _outdir(args)
        bench.emit([row], outdir / f"{args.prefix}.csv")
        _write_config(outdir / f"{args.prefix}_config.txt",
                      _resolved_args(args, omega=omega, omega_unit="rad"))
        print(f"row -> {outdir / (args.prefix + '.csv')}")
    return 0


def cmd_sweep(args) -> int:
    omegas_in = (_parse_float_list(args.omegas) if args.omegas is not None
                 else list(bench.DESK_OMEGAS_HZ))
    unit = args.omega_unit if args.omegas is not None else "hz"
    omegas = [_omega_rad(v, unit) for v in omegas_in]
    schemes = _parse_name_list(args.schemes)
    for scheme in schemes:
        if scheme not in bench.SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
    modes = _parse_name_list(args.modes)
    for mode in modes:
        if mode not in bench.BIAS_MODES:
            raise ValueError(f"unknown bias mode {mode!r}")
    bits = [_check_bits(b) for b in _parse_int_list(args.bits)]
    seeds = range(bench.FULL_SEEDS if args.full else args.seeds)
    grid = bench.make_grid(_base_config(args), bits=bits, schemes=schemes,
                           seeds=seeds, omegas=omegas, modes=modes)
    rows = bench.sweep(grid, workers=args.workers)
    outdir = _outdir(args)
    csv_path = bench.emit(rows, outdir / f"{args.prefix}.csv")
    bench.emit(rows, outdir / f"{args.prefix}.py", fmt="plot-script")
    report.render_mse_figure(rows, outdir / f"{args.prefix}_mse.png")
    report.render_overhead_figure(rows, outdir / f"{args.prefix}_overhead.png")
    _write_config(outdir / f"{args.prefix}_config.txt",
                  _resolved_args(args, omegas=omegas, omega_unit="rad",
                                 seeds=len(list(seeds))))
    failures = [row for row in rows if row.kind == "error"]
    print(f"{sum(1 for r in rows if r.kind == 'trial')} trials -> {csv_path}")
    if failures:
        for row in failures:
            print(f"failed: scheme={row.scheme} bits={row.bits} "
                  f"seed={row.seed}: {row.error}", file=sys.stderr)
        return 1
    return 0


def cmd_table1(args) -> int:
    duration = args.duration if args.duration is not None else 0.1
    omega = _omega_rad(args.omega, args.omega_unit)
    schemes = _parse_name_list(args.schemes)
    for scheme in schemes:
        if scheme not in ("ccif", "dcif"):
            raise ValueError(f"table schemes must be windowed, got {scheme!r}")
    cif_bits = [_check_bits(b) for b in _parse_int_list(args.cif_bits)]
    base = dataclasses.replace(_base_config(args), omega=omega,
                               duration=duration)
    rows = bench.table1(seeds=range(args.seeds), cif_bits=cif_bits,
                        bit_gap=args.bit_gap, schemes=tuple(schemes),
                        base=base, workers=args.workers)
    header = ["cif", "if", "mse_if"]
    for scheme in schemes:
        header += [f"mse_{scheme}", f"diff_{scheme}", f"comp%_{scheme}"]
    print("  ".join(f"{h:>12}" for h in header))
    for row in rows:
        cells = [f"{row['cif_bits']:>12}", f"{row['if_bits']:>12}",
                 f"{row['mse_iftem']:>12.2f}"]
        for scheme in schemes:
            cells += [f"{row[f'mse_{scheme}']:>12.2f}",
                      f"{row[f'mse_diff_{scheme}']:>12.2f}",
                      f"{row[f'compression_{scheme}']:>12.2f}"]
        print("  ".join(cells))
    outdir = _outdir(args)
    csv_path = bench.emit(rows, outdir / f"{args.prefix}.csv")
    _write_config(outdir / f"{args.prefix}_config.txt",
                  _resolved_args(args, omega=omega, omega_unit="rad",
                                 duration=duration))
    print(f"table -> {csv_path}")
    if not args.no_check:
        problems = bench.check_table(rows, schemes=tuple(schemes))
        if problems:
            for problem in problems:
                print(f"check failed: {problem}", file=sys.stderr)
            return 1
    return 0


_DISPATCH = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "trial": cmd_trial,
    "sweep": cmd_sweep,
    "table1": cmd_table1,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _make_parser(suppress=False)
    args = parser.parse_args(argv)
    given = set(vars(_make_parser(suppress=True).parse_args(argv)))
    try:
        if getattr(args, "config", None):
            _apply_config(args, given, args.config)
        return _DISPATCH[args.command](args)
    except (IftemError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
