"""``lre-lab`` command-line front end.

Exit status: 0 on success, 2 for unreadable or malformed input, 3 for
numerical-domain errors, 4 when a solver fails to converge.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .divergence import chernoff_point
from .errors import ConvergenceError, DomainError, SchemaError
from .hyptest import LRTest, WorkSamples, bar_estimate, mc_error_rates, sanov_exponents
from .family import BetaPoint
from .rdib import RDCSolution, RDProblem, _map, ba_solve, ib_distortion_from_classifier, rdc_surface
from .serialization import atomic_write, fmt, load_json, path_from_dict, rows_to_csv, to_json
from .ti import DEFAULT_EPS, make_schedule, ti_bounds

COMMANDS = (
    "psi-curve",
    "ti-bounds",
    "chernoff",
    "np-exponents",
    "mc-test",
    "bar",
    "rd-curve",
    "rdc-surface",
    "ib",
)
ROW_COMMANDS = {"psi-curve", "rd-curve", "rdc-surface", "ib"}


@dataclass
class RunConfig:
    command: str
    input_path: str
    output_path: str | None = None
    format: str | None = None
    seed: int = 0
    K: int | None = None
    schedule: str = "uniform"
    eps: float = DEFAULT_EPS
    beta_grid: list[float] | None = None
    beta_d: list[float] | None = None
    beta_c: list[float] | None = None
    n: int | None = None
    trials: int | None = None
    threshold: float = 0.0

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise SchemaError(f"unknown command {self.command!r}")
        if self.format not in (None, "csv", "json"):
            raise SchemaError(f"format must be csv or json, got {self.format!r}")
        need = {
            "rd-curve": ("beta_grid",),
            "rdc-surface": ("beta_d", "beta_c"),
            "ib": ("beta_grid",),
            "mc-test": ("n", "trials"),
        }.get(self.command, ())
        missing = [f"--{name.replace('_', '-')}" for name in need if getattr(self, name) is None]
        if missing:
            raise SchemaError(f"{self.command} requires {', '.join(missing)}")
        if self.command == "psi-curve" and self.beta_grid is None and self.K is None:
            raise SchemaError("psi-curve requires --beta-grid or --K")
        if self.K is not None and self.K < 1:
            raise SchemaError(f"--K must be at least 1, got {self.K}")

    @property
    def resolved_format(self) -> str:
        if self.format:
            return self.format
        return "csv" if self.command in ROW_COMMANDS else "json"


def _psi_curve(cfg):
    path = path_from_dict(load_json(cfg.input_path))
    if cfg.beta_grid is not None:
        betas = cfg.beta_grid
    else:
        betas = make_schedule(cfg.schedule, cfg.K, path, cfg.eps).betas
    points = _map(path.point, list(betas), None)
    rows = [p.as_row() for p in points]
    summary = f"psi-curve: rows={len(rows)} psi(first)={fmt(rows[0]['psi'])} psi(last)={fmt(rows[-1]['psi'])}"
    return summary, rows, BetaPoint.CSV_HEADER


def _ti_bounds(cfg):
    path = path_from_dict(load_json(cfg.input_path))
    sched = make_schedule(cfg.schedule, cfg.K or 1, path, cfg.eps)
    report = ti_bounds(path, sched)
    summary = (
        f"lower={fmt(report.lower)} upper={fmt(report.upper)} "
        f"true={fmt(report.true_logratio)} gap={fmt(report.gap)}"
    )
    if cfg.resolved_format == "csv":
        return summary, report.integrand_rows(), ("beta_t", "eta_t")
    return summary, report.to_dict(), None


def _chernoff(cfg):
    res = chernoff_point(path_from_dict(load_json(cfg.input_path)))
    return f"beta_star={res.beta_star:.6f} C={res.chernoff_info:.6f}", res.to_dict(), None


def _np_exponents(cfg):
    e1, e2, beta = sanov_exponents(path_from_dict(load_json(cfg.input_path)), cfg.threshold)
    out = {"threshold": cfg.threshold, "e1_exponent": e1, "e2_exponent": e2, "beta": beta}
    return f"e1={e1:.6f} e2={e2:.6f} beta={beta:.6f}", out, None


def _mc_test(cfg):
    path = path_from_dict(load_json(cfg.input_path))
    t1, t2 = mc_error_rates(path, LRTest(cfg.threshold, cfg.n), cfg.trials, cfg.seed)
    out = {
        "threshold": cfg.threshold,
        "n": cfg.n,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "type1_rate": t1,
        "type2_rate": t2,
    }
    return f"type1_rate={t1:.6f} type2_rate={t2:.6f}", out, None


def _bar(cfg):
    if str(cfg.input_path).endswith(".csv"):
        try:
            text = Path(cfg.input_path).read_text()
        except FileNotFoundError:
            raise SchemaError(f"input file {cfg.input_path!r} not found") from None
        samples = WorkSamples.from_csv(text)
    else:
        if cfg.n is None:
            raise SchemaError("bar on a path document requires --n")
        path = path_from_dict(load_json(cfg.input_path))
        samples = WorkSamples.from_path(path, cfg.n, cfg.n, cfg.seed)
    res = bar_estimate(samples)
    out = dict(res.to_dict(), n_f=samples.n_f, n_r=samples.n_r)
    return f"delta_f={res.delta_f_hat:.6f} stderr={res.stderr_est:.6f}", out, None


def _solution_rows(sols, label):
    rows = [s.as_row() for s in sols]
    worst = max(abs(r["residual"]) for r in rows)
    return f"{label}: points={len(rows)} max_residual={worst:.3g}", rows, RDCSolution.CSV_HEADER


def _rd_curve(cfg):
    p = RDProblem.from_dict(load_json(cfg.input_path))
    sols = _map(lambda b: ba_solve(p, b, 0.0), list(cfg.beta_grid), None)
    sols.sort(key=lambda s: (s.distortion, -s.beta_d))
    return _solution_rows(sols, "rd-curve")


def _rdc_surface(cfg):
    p = RDProblem.from_dict(load_json(cfg.input_path))
    return _solution_rows(rdc_surface(p, cfg.beta_d, cfg.beta_c), "rdc-surface")


def _ib(cfg):
    doc = load_json(cfg.input_path)
    if not isinstance(doc, dict):
        raise SchemaError("ib input must be a JSON object")
    missing = {"q", "p_y_given_x", "p_y_given_z"} - set(doc)
    if missing:
        raise SchemaError(f"ib input is missing {sorted(missing)}")
    c = ib_distortion_from_classifier(doc["p_y_given_x"], doc["p_y_given_z"])
    d = doc.get("d", np.zeros_like(c))
    p = RDProblem(doc["q"], d, c, doc.get("m"))
    beta_d = cfg.beta_d[0] if cfg.beta_d else 0.0
    sols = _map(lambda bc: ba_solve(p, beta_d, bc), list(cfg.beta_grid), None)
    return _solution_rows(sols, "ib")


HANDLERS = {
    "psi-curve": _psi_curve,
    "ti-bounds": _ti_bounds,
    "chernoff": _chernoff,
    "np-exponents": _np_exponents,
    "mc-test": _mc_test,
    "bar": _bar,
    "rd-curve": _rd_curve,
    "rdc-surface": _rdc_surface,
    "ib": _ib,
}


def run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
        summary, payload, header = HANDLERS[cfg.command](cfg)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (DomainError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    if cfg.output_path:
        if cfg.resolved_format == "csv":
            rows = payload if isinstance(payload, list) else [payload]
            text = rows_to_csv(rows, header or tuple(rows[0]))
        else:
            text = to_json(payload)
        atomic_write(cfg.output_path, text)
    print(summary)
    return 0


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lre-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", required=True, help="JSON problem file (or work CSV for bar)")
        sp.add_argument("--out", help="output file, written atomically")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--beta-grid", type=_floats, help="comma-separated beta values")
        sp.add_argument("--K", type=int, help="number of schedule intervals")
        sp.add_argument(
            "--schedule", choices=("uniform", "log-uniform", "moment"), default="uniform"
        )
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS)
        sp.add_argument("--n", type=int, help="samples per test or per BAR direction")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--threshold", type=float, default=0.0)
        sp.add_argument("--beta-d", type=_floats)
        sp.add_argument("--beta-c", type=_floats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input_path=args.input,
        output_path=args.out,
        format=args.format,
        seed=args.seed,
        K=args.K,
        schedule=args.schedule,
        eps=args.eps,
        beta_grid=args.beta_grid,
        beta_d=args.beta_d,
        beta_c=args.beta_c,
        n=args.n,
        trials=args.trials,
        threshold=args.threshold,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
