"""Command-line entry point.

Exit codes: 0 success, 1 a check or study verdict failed, 2 invalid input,
3 a run stopped at the blow-up sentinel.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import SUITES, verify
from .config import ConfigError, load_config, load_kernel_lab_config
from .harness import blowup_study, run
from .hartree import newton_radial_potential
from .semigroup_lab import (
    DecayProbe,
    DuhamelConfig,
    decay_exponent_fit,
    duhamel_scaling_probe,
    fit_to_csv,
    standard_probe_matrix,
)
from .spectral import make_grid

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BLOWUP = 0, 1, 2, 3


def _eps_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run(cfg, output_dir=args.output)
    print(json.dumps({k: res.report[k] for k in ("status", "final_time", "sentinel_reason", "energy0")}))
    return res.exit_code


def _cmd_blowup_study(args) -> int:
    cfg = load_config(args.config)
    out = args.output or Path(cfg.output.directory) / "blowup-study"
    rep = blowup_study(cfg, args.eps, output_dir=out)
    print(rep.table())
    print(f"dichotomy holds: {rep.dichotomy_holds}")
    return EXIT_OK if rep.dichotomy_holds else EXIT_FAIL


def _cmd_verify(args) -> int:
    report = verify(args.suite)
    text = json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text)
    print(text)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _fmt(v: float) -> str:
    return "inf" if np.isinf(v) else f"{v:g}"


def _cmd_kernel_lab(args) -> int:
    cfg = load_kernel_lab_config(args.probe_config)
    grid = make_grid(cfg.grid.n, cfg.grid.L)
    out = Path(args.output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.probes is None:
        probes = standard_probe_matrix()
    else:
        probes = [DecayProbe(**p.model_dump()) for p in cfg.probes]
    decay, duhamel = [], []
    for pr in probes:
        fit = decay_exponent_fit(pr, grid)
        name = f"decay_a{_fmt(pr.alpha)}_nu{_fmt(pr.nu)}_p{_fmt(pr.p)}_r{_fmt(pr.r)}.csv"
        (out / name).write_text(fit_to_csv(fit))
        v = fit.verdict(cfg.tolerance, cfg.zero_tolerance)
        v["csv"] = name
        decay.append(v)
        print(f"{'PASS' if v['pass'] else 'FAIL'}  decay {name[:-4]}: fitted {v['fitted']:.4f} "
              f"predicted {v['predicted']:.4f}")
    for item in cfg.duhamel:
        res = duhamel_scaling_probe(DuhamelConfig(**item.model_dump()), grid)
        name = f"duhamel_a{_fmt(item.alpha)}_b{_fmt(item.b)}_p{_fmt(item.p)}_r{_fmt(item.r)}.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "sup_norm", "ratio", "used"])
        for row in zip(res.T, res.sup_norms, res.ratios, res.used):
            w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])), int(row[3])])
        (out / name).write_text(buf.getvalue())
        v = res.verdict(cfg.duhamel_tolerance)
        v["csv"] = name
        duhamel.append(v)
        print(f"{'PASS' if v['pass'] else 'FAIL'}  duhamel {name[:-4]}: fitted {v['fitted']:.4f} "
              f"predicted {v['predicted']:.4f}")
    ok = all(v["pass"] for v in decay + duhamel)
    verdict = {"pass": ok, "grid": {"n": cfg.grid.n, "L": cfg.grid.L}, "decay": decay, "duhamel": duhamel}
    (out / "verdict.json").write_text(json.dumps(verdict, indent=2, default=str))
    return EXIT_OK if ok else EXIT_FAIL


def _read_density(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV (r, n); a non-numeric first row is taken as a header."""
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError):
        raise ConfigError(f"{path}: expected two numeric columns r,n") from None
    if data.shape[0] < 2:
        raise ConfigError(f"{path}: need at least two rows")
    return data[:, 0], data[:, 1]


def _cmd_potential_oracle(args) -> int:
    r, n = _read_density(args.density_file)
    try:
        v = newton_radial_potential(r, n, r)
    except ValueError as exc:
        raise ConfigError(f"{args.density_file}: {exc}") from None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "V"])
    for ri, vi in zip(r, v):
        w.writerow([repr(float(ri)), repr(float(vi))])
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spsim", description="Dissipative semi-relativistic Hartree simulator")
    ap.add_argument("--version", action="version", version=f"spsim {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one configuration")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (default: output.directory)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("blowup-study", help="same data for several epsilon values")
    p.add_argument("config")
    p.add_argument("--eps", type=_eps_list, required=True, help="comma-separated, must include 0")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_blowup_study)

    p = sub.add_parser("verify", help="run a pinned verification suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("-o", "--output", help="also write the JSON report here")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("kernel-lab", help="semigroup exponent probes from a YAML probe file")
    p.add_argument("probe_config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_kernel_lab)

    p = sub.add_parser("potential-oracle", help="shell-formula potential of a radial density CSV")
    p.add_argument("density_file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_potential_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
