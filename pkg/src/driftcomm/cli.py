"""Command-line front end.

Exit codes: 0 success (infeasible-but-valid results included), 1 usage or
configuration error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .channel import hitting_cdf, hitting_pdf
from .interval import isi_conditions_hold
from .modulation import Mode
from .scenario import (
    PRESETS,
    PUBLISHED_INTERVALS,
    Scenario,
    Settings,
    intervals,
    mode_rate,
    select_transmit_mode,
    with_variable,
)
from .validation import run_validation

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2

SWEEP_HEADER = ["scenario", "mode", "variable", "value", "Ts_s", "tau_star", "mi_bits",
                "rate_bits_per_s", "error_prob", "total_mass", "policy"]
MODE_NAMES = {"one-isi": Mode.ONE_ISI, "no-isi": Mode.NO_ISI}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """Number rendering for CSV: 12 significant digits, literal inf/nan."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("scenario")
    g.add_argument("--config", help="JSON config with scenario/modulation/noise/isi/search/sim sections")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--name")
    g.add_argument("--distance", type=_float, help="transmitter-receiver distance (um)")
    g.add_argument("--velocity", type=_float, help="drift velocity (um/s)")
    g.add_argument("--diffusion", type=_float, help="diffusion coefficient (um^2/s)")
    g.add_argument("--temperature", type=_float, help="K; with --viscosity and --radius-nm replaces --diffusion")
    g.add_argument("--viscosity", type=_float, help="kg/(s m)")
    g.add_argument("--radius-nm", type=_float)
    g = parser.add_argument_group("model")
    g.add_argument("--n", type=int, help="molecules per symbol")
    g.add_argument("--alphabet-size", type=int, choices=(2, 4))
    g.add_argument("--policy", choices=("renormalize", "erasure"))
    g.add_argument("--snr", type=_float, help="SNR in dB ('inf' for noiseless)")
    g.add_argument("--variance-model", choices=("power", "poisson"))
    g.add_argument("--noise-reference", choices=("shared", "mode"))
    g.add_argument("--A", type=_float, dest="A")
    g.add_argument("--epsilon", type=_float)
    g.add_argument("--delta", type=_float, help="no-ISI tolerance on molecules still in flight")
    g.add_argument("--t-min", type=_float, help="interval search lower bound (s)")
    g.add_argument("--t-max", type=_float, help="interval search upper bound (s)")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", help="write output here instead of stdout")
    g.add_argument("--echo-config", help="write the effective configuration to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftcomm", description="Symbol-interval and rate analysis for drift channels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("interval", help="optimized symbol intervals for both modes")
    _common(p)

    p = sub.add_parser("rate", help="achievable rate at one SNR")
    _common(p)
    p.add_argument("--mode", choices=("one-isi", "no-isi", "auto"), default="auto")

    p = sub.add_parser("sweep", help="CSV of rates over an SNR, velocity or distance sweep")
    _common(p)
    p.add_argument("--variable", choices=("snr_db", "velocity", "distance"), required=True)
    p.add_argument("--values", type=_float_list, help="comma-separated values")
    p.add_argument("--range", nargs=3, type=_float, metavar=("START", "STOP", "STEP"),
                   help="inclusive arithmetic range")
    p.add_argument("--logrange", nargs=3, type=_float, metavar=("START", "STOP", "COUNT"),
                   help="log-spaced values")
    p.add_argument("--grid", help="outer sweep NAME=v1,v2,... repeated for each value (e.g. distance=1,10)")
    p.add_argument("--modes", default="one-isi,no-isi")

    p = sub.add_parser("pdf", help="CSV of hitting-time pdf and cdf samples")
    _common(p)
    p.add_argument("--times", type=_float_list, help="comma-separated times (s)")
    p.add_argument("--span", nargs=3, type=_float, metavar=("T_MIN", "T_MAX", "COUNT"),
                   help="log-spaced times", default=None)

    p = sub.add_parser("validate", help="run the Monte Carlo oracle checks")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--dt", type=_float, help="walk step (s); coarse values are allowed here")
    p.add_argument("--horizon", type=_float, help="walk censoring horizon (s)")
    p.add_argument("--symbols", type=int)
    p.add_argument("--crossing", choices=("bridge", "interpolate"))
    return parser


def _overrides(args) -> dict:
    medium = None
    parts = (args.temperature, args.viscosity, args.radius_nm)
    if any(v is not None for v in parts):
        if any(v is None for v in parts):
            raise UsageError("--temperature, --viscosity and --radius-nm go together")
        medium = {"temperature": args.temperature, "viscosity": args.viscosity, "radius_nm": args.radius_nm}
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return {
        "scenario": {"preset": args.preset, "name": args.name, "distance": args.distance,
                     "velocity": args.velocity, "diffusion": args.diffusion, "medium": medium},
        "modulation": {"n": args.n, "alphabet_size": args.alphabet_size, "policy": args.policy},
        "noise": {"snr_db": args.snr, "variance_model": args.variance_model, "reference": args.noise_reference},
        "isi": {"A": args.A, "epsilon": args.epsilon, "delta": args.delta},
        "search": {"t_min": args.t_min, "t_max": args.t_max},
        "sim": {"seed": args.seed, "trials": get("trials"), "dt": get("dt"), "t_max": get("horizon"),
                "symbols": get("symbols"), "crossing": get("crossing")},
    }


VALIDATION_PRESETS = ("capillaries", "weak_drift")


def _has_scenario(cfg: dict) -> bool:
    sc = cfg["scenario"]
    return sc.get("preset") is not None or sc.get("distance") is not None


def _load(args) -> cfgmod.Run:
    cfg = cfgmod.apply_overrides(cfgmod.load(args.config), _overrides(args))
    args.default_scenarios = False
    if args.command == "validate" and not _has_scenario(cfg):
        # scenario-free validate covers the default presets; the first one carries the config echo
        args.default_scenarios = True
        cfg["scenario"] = {"preset": VALIDATION_PRESETS[0]}
    run = cfgmod.build(cfg)
    if args.echo_config:
        _write(args.echo_config, cfgmod.dumps(run.config))
    return run


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _interval_dict(res) -> dict:
    return {"Ts_s": res.Ts, "mode": res.mode.value, "p_hit_current": res.p_hit_current,
            "p_residual": res.p_residual, "criteria_met": res.criteria_met}


def _rate_dict(r) -> dict:
    return {"mode": r.mode.value, "Ts_s": r.Ts, "snr_db": r.snr_db, "tau_star": r.tau_star,
            "mi_bits": r.mi_bits, "rate_bits_per_s": r.rate_normalized, "error_prob": r.error_prob,
            "total_mass": r.total_mass, "policy": r.policy}


def cmd_interval(run: cfgmod.Run) -> dict:
    ch, s = run.scenario.channel, run.settings
    ivs = intervals(ch, s)
    report = {
        "scenario": run.scenario.name,
        "one_isi": _interval_dict(ivs.one_isi),
        "no_isi": _interval_dict(ivs.no_isi),
        "config": run.config,
    }
    if run.preset in PUBLISHED_INTERVALS:
        ref_one, ref_no = PUBLISHED_INTERVALS[run.preset]
        report["reference"] = {
            "one_isi_Ts_s": ref_one,
            "no_isi_Ts_s": ref_no,
            "criteria_hold_at_reference": isi_conditions_hold(ref_one, ch, s.criteria),
        }
    return report


def cmd_rate(run: cfgmod.Run, mode: str) -> dict:
    ch, s = run.scenario.channel, run.settings
    ivs = intervals(ch, s)
    report = {"scenario": run.scenario.name, "snr_db": run.snr_db, "config": run.config}
    if mode == "auto":
        sel = select_transmit_mode(run.scenario, run.snr_db, s, ivs)
        report["selected"] = sel.selected.value
        report["results"] = [_rate_dict(sel.results[m]) for m in (Mode.ONE_ISI, Mode.NO_ISI)]
    else:
        r = mode_rate(MODE_NAMES[mode], ch, run.snr_db, s, ivs)
        report["selected"] = r.mode.value
        report["results"] = [_rate_dict(r)]
    return report


def _sweep_point(job):
    scenario, settings, variable, value, snr_db, modes = job
    if variable == "snr_db":
        snr = value
    else:
        scenario = with_variable(scenario, variable, value)
        snr = snr_db
    ivs = intervals(scenario.channel, settings)
    rows = []
    for mode in modes:
        r = mode_rate(mode, scenario.channel, snr, settings, ivs)
        rows.append([scenario.name, mode.value, variable, value, r.Ts, r.tau_star, r.mi_bits,
                     r.rate_normalized, r.error_prob, r.total_mass, r.policy])
    return rows


def sweep_rows(scenario: Scenario, settings: Settings, variable: str, values, snr_db: float,
               modes, workers: int = 1) -> list[list]:
    """Rows ordered by value, then mode, whatever the worker count."""
    jobs = [(scenario, settings, variable, v, snr_db, tuple(modes)) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sweep_point, jobs))
    else:
        parts = [_sweep_point(j) for j in jobs]
    return [row for part in parts for row in part]


def _sweep_values(args) -> list[float]:
    given = [x is not None for x in (args.values, args.range, args.logrange)]
    if sum(given) != 1:
        raise UsageError("give exactly one of --values, --range, --logrange")
    if args.values is not None:
        values = list(args.values)
    elif args.range is not None:
        start, stop, step = args.range
        if step == 0:
            raise UsageError("--range step must be non-zero")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(max(count, 0))]
    else:
        start, stop, count = args.logrange
        if start <= 0 or stop <= 0 or count < 1:
            raise UsageError("--logrange needs positive bounds and count")
        values = list(np.geomspace(start, stop, int(count)))
    if not values:
        raise UsageError("sweep has no values")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise UsageError("sweep values must be strictly monotone")
    return [float(v) for v in values]


def cmd_sweep(run: cfgmod.Run, args) -> str:
    values = _sweep_values(args)
    try:
        modes = [MODE_NAMES[m.strip()] for m in args.modes.split(",") if m.strip()]
    except KeyError as exc:
        raise UsageError(f"unknown mode {exc}") from None
    if not modes:
        raise UsageError("no modes selected")
    outer = [(run.scenario, None)]
    if args.grid:
        name, _, raw = args.grid.partition("=")
        if name not in ("velocity", "distance") or name == args.variable:
            raise UsageError("--grid must name velocity or distance, different from --variable")
        try:
            outer_values = _float_list(raw)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from None
        outer = [(with_variable(run.scenario, name, v), f"{name}={fmt(v)}") for v in outer_values]
    rows = []
    for sc, label in outer:
        if label:
            sc = Scenario(f"{run.scenario.name}[{label}]", sc.channel, sc.medium)
        rows.extend(sweep_rows(sc, run.settings, args.variable, values, run.snr_db, modes, args.workers))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def cmd_pdf(run: cfgmod.Run, args) -> str:
    if args.times is not None:
        times = np.asarray(args.times, dtype=float)
    else:
        t_min, t_max, count = args.span or (1e-3, 1e3, 601)
        if t_min <= 0 or t_max <= t_min or count < 2:
            raise UsageError("--span needs 0 < T_MIN < T_MAX and COUNT >= 2")
        times = np.geomspace(t_min, t_max, int(count))
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise UsageError("times must be positive and strictly ascending")
    ch = run.scenario.channel
    pdf = hitting_pdf(times, ch)
    cdf = np.maximum.accumulate(np.atleast_1d(hitting_cdf(times, ch)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_s", "pdf_per_s", "cdf"])
    for t, f, F in zip(times, np.atleast_1d(pdf), cdf):
        w.writerow([fmt(t), fmt(f), fmt(F)])
    return buf.getvalue()


def cmd_validate(run: cfgmod.Run, args) -> dict:
    if args.default_scenarios:
        scenarios = [PRESETS[name] for name in VALIDATION_PRESETS]
    else:
        scenarios = [run.scenario]
    report = run_validation(scenarios, run.settings, run.sim, workers=args.workers, snr_db=run.snr_db,
                            n_symbols=run.symbols)
    report["config"] = run.config
    report["scenarios"] = [s.name for s in scenarios]
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        run = _load(args)
        if args.command == "interval":
            _write(args.out, cfgmod.dumps(cmd_interval(run)))
        elif args.command == "rate":
            _write(args.out, cfgmod.dumps(cmd_rate(run, args.mode)))
        elif args.command == "sweep":
            _write(args.out, cmd_sweep(run, args))
        elif args.command == "pdf":
            _write(args.out, cmd_pdf(run, args))
        elif args.command == "validate":
            report = cmd_validate(run, args)
            _write(args.out, cfgmod.dumps(report))
            if not report["passed"]:
                for c in report["checks"]:
                    if not c["passed"]:
                        print(f"FAIL {c['scenario']} {c['name']}: {fmt(c['value'])} vs {fmt(c['limit'])} "
                              f"({c['detail']})", file=sys.stderr)
                return EXIT_VALIDATION
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"driftcomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
