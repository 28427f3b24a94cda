"""Command-line front end: ``qutrit-ctx <command> [flags]``.

Every CSV is written with 17 significant digits and LF line endings, next to
a ``<out>.manifest.json`` describing the run.  Exit codes: 0 success,
1 verification failure, 2 bad usage, 3 IO error, 4 optimizer infeasibility.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from qutrit_contextuality import __version__
from qutrit_contextuality.errors import InfeasibleError
from qutrit_contextuality.graphs import independence_number, make_kcbs_graph, make_kk_graph, named_graph
from qutrit_contextuality.measurements import (
    align_to_state,
    contextuality_value,
    orthogonal_pairs,
    overall_matrix,
    table_1a,
    table_1b,
    table_2,
)
from qutrit_contextuality.optimizer import OptimizerConfig, mcms_lower, mcms_upper, pure_state_optimum
from qutrit_contextuality.spectral import (
    curve_slope_analysis,
    default_family,
    diagonal_violation_surface,
    lemma_suite,
    spectral_curve,
)
from qutrit_contextuality.states import QutritSpectrum

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4

SQRT5 = math.sqrt(5.0)
LOVASZ = {"kcbs": SQRT5, "kk": 10.0 / 3.0}


class UsageError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str
    duration_s: float

    def write(self, csv_path: str | Path) -> Path:
        path = Path(f"{csv_path}.manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def format_row(values) -> str:
    return ",".join(f"{float(v):.17g}" for v in values)


def write_csv(path: str | Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")


def resolve_config(config_path: str | None = None, seed: int | None = None, starts: int | None = None) -> OptimizerConfig:
    """CLI flag > JSON config file > built-in default."""
    data = OptimizerConfig().to_dict()
    if config_path is not None:
        text = Path(config_path).read_text(encoding="utf-8")
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {config_path}: invalid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise UsageError(f"config {config_path}: expected a JSON object")
        data.update(loaded)
    if seed is not None:
        data["seed"] = seed
    if starts is not None:
        data["starts"] = starts
    try:
        return OptimizerConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid optimizer config: {exc}") from exc


def _graph_for(inequality: str):
    if inequality not in LOVASZ:
        raise UsageError(f"unknown inequality {inequality!r}; expected kcbs or kk")
    return named_graph(inequality)


# -- commands ------------------------------------------------------------------


def _check(name: str, residual: float, tol: float, out) -> bool:
    ok = bool(residual <= tol)
    print(f"{'PASS' if ok else 'FAIL'}  {name}: residual {residual:.3e} (tol {tol:g})", file=out)
    return ok


def cmd_verify_tables(out=None) -> int:
    kcbs, kk = make_kcbs_graph(), make_kk_graph()
    b_minor = (5.0 - SQRT5) / 2.0
    expected = {
        "table 1a": (table_1a(), (2.0, 2.0, 1.0)),
        "table 1b": (table_1b(), (SQRT5, b_minor, b_minor)),
        "table 2": (table_2(), (10.0 / 3.0, 3.0, 8.0 / 3.0)),
    }
    ok = True
    for name, (ms, spectrum) in expected.items():
        om = overall_matrix(ms)
        err = float(np.max(np.abs(np.asarray(om.spectrum) - spectrum)))
        ok &= _check(f"{name} spectrum {tuple(round(x, 6) for x in om.spectrum)}", err, 1e-12, out)
        ok &= _check(f"{name} edge orthogonality", ms.edge_residual(), 1e-12, out)
        eig = float(np.max(np.abs(om.m @ om.eigenbasis - om.eigenbasis * np.asarray(om.spectrum))))
        ok &= _check(f"{name} eigen-equation", eig, 1e-9, out)
    for name, ms, g in (("KCBS", table_1b(), kcbs), ("KK", table_2(), kk)):
        pairs = orthogonal_pairs(ms.vectors)
        diff = len(pairs.symmetric_difference(set(g.edges)))
        ok &= _check(f"{name} graph equals orthogonal pairs of its table", float(diff), 0.0, out)
    for name, g, alpha in (("KCBS", kcbs, 2), ("KK", kk, 3)):
        ok &= _check(f"{name} independence number = {alpha}", float(abs(independence_number(g) - alpha)), 0.0, out)
    pure = QutritSpectrum.pure()
    ok &= _check("table 1b at pure state = sqrt(5)", abs(contextuality_value(pure, table_1b()) - SQRT5), 1e-12, out)
    ok &= _check(
        "aligned table 2 at pure state = 10/3",
        abs(contextuality_value(pure, align_to_state(table_2())) - 10.0 / 3.0),
        1e-12,
        out,
    )
    print("PASS" if ok else "FAIL", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def curve_rows(inequality: str, bound: str, samples: int, cfg: OptimizerConfig) -> list[tuple[float, ...]]:
    if samples < 2:
        raise UsageError("samples must be at least 2")
    if bound not in ("upper", "lower"):
        raise UsageError(f"unknown bound {bound!r}; expected upper or lower")
    g = _graph_for(inequality)
    search = mcms_upper if bound == "upper" else mcms_lower
    rows = []
    for s in np.linspace(0.0, 1.0, samples):
        rho, value = search(g, float(s), cfg)
        rows.append((float(s), value, *rho.lam))
    return rows


def cmd_curve(inequality: str, bound: str, samples: int, out: str, cfg: OptimizerConfig, stdout=None) -> int:
    start = time.perf_counter()
    rows = curve_rows(inequality, bound, samples, cfg)
    write_csv(out, "s,cq,lambda1,lambda2,lambda3", rows)
    RunManifest(
        "curve",
        {"inequality": inequality, "bound": bound, "samples": samples, "optimizer": cfg.to_dict()},
        cfg.seed,
        __version__,
        time.perf_counter() - start,
    ).write(out)
    print(f"wrote {len(rows)} rows to {out}", file=stdout)
    return EXIT_OK


def cmd_spectral(inequality: str, samples: int, out: str, cfg: OptimizerConfig, stdout=None) -> int:
    if samples < 3:
        raise UsageError("samples must be at least 3")
    start = time.perf_counter()
    g = _graph_for(inequality)
    points = spectral_curve(g, default_family(inequality, samples), cfg)
    write_csv(out, "m1,m2,m3,s", [(p.m1, p.m2, p.m3, p.s) for p in points])
    RunManifest(
        "spectral",
        {"inequality": inequality, "samples": samples, "optimizer": cfg.to_dict()},
        cfg.seed,
        __version__,
        time.perf_counter() - start,
    ).write(out)
    report = curve_slope_analysis(points, inequality)
    print(report.summary(), file=stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_lemma(trials: int, seed: int, dims, unitary: str = "haar", stdout=None) -> int:
    try:
        report = lemma_suite(trials, seed, dims, unitary)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(report.summary(), file=stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_surface(out: str, grid: int, stdout=None) -> int:
    if grid < 2:
        raise UsageError("grid must be at least 2")
    start = time.perf_counter()
    rows = diagonal_violation_surface(table_1b(), grid)
    write_csv(out, "lambda1,lambda2,cq", rows)
    RunManifest("surface", {"grid": grid, "table": "1b"}, 0, __version__, time.perf_counter() - start).write(out)
    print(f"wrote {len(rows)} rows to {out}", file=stdout)
    return EXIT_OK


def cmd_theta(inequality: str, cfg: OptimizerConfig, stdout=None) -> int:
    value = pure_state_optimum(_graph_for(inequality), cfg)
    ref = LOVASZ[inequality]
    ok = abs(value - ref) <= 1e-6
    print(f"{inequality} pure-state optimum {value:.15g} (Lovasz number {ref:.15g}, diff {value - ref:.3e})", file=stdout)
    print("PASS" if ok else "FAIL", file=stdout)
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing ----------------------------------------------------------


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError("dims must be positive")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qutrit-ctx", description="Contextuality of qutrit mixed states.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def optimizer_flags(p):
        p.add_argument("--seed", type=int, default=None, help="multistart seed")
        p.add_argument("--starts", type=int, default=None, help="number of multistart starts")
        p.add_argument("--config", default=None, help="JSON file with OptimizerConfig fields")

    sub.add_parser("verify-tables", help="check the measurement tables and graphs")

    p = sub.add_parser("curve", help="upper/lower contextuality bound against linear entropy")
    p.add_argument("--inequality", choices=("kcbs", "kk"), required=True)
    p.add_argument("--bound", choices=("upper", "lower"), required=True)
    p.add_argument("--samples", type=int, default=21)
    p.add_argument("--out", required=True)
    optimizer_flags(p)

    p = sub.add_parser("spectral", help="(m1, m2, m3) spectra of optimal measurement sets")
    p.add_argument("--inequality", choices=("kcbs", "kk"), required=True)
    p.add_argument("--samples", type=int, default=31)
    p.add_argument("--out", required=True)
    optimizer_flags(p)

    p = sub.add_parser("lemma", help="randomised trace-inequality suite")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=_dims, default=(2, 3, 5, 9))
    p.add_argument("--unitary", choices=("haar", "identity", "reverse"), default="haar")

    p = sub.add_parser("surface", help="contextuality of table 1b over all diagonal states")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--out", required=True)

    p = sub.add_parser("theta", help="pure-state optimum against the Lovasz number")
    p.add_argument("--inequality", choices=("kcbs", "kk"), required=True)
    optimizer_flags(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-tables":
            return cmd_verify_tables()
        if args.command == "lemma":
            return cmd_lemma(args.trials, args.seed, args.dims, args.unitary)
        if args.command == "surface":
            return cmd_surface(args.out, args.grid)
        cfg = resolve_config(args.config, args.seed, args.starts)
        if args.command == "curve":
            return cmd_curve(args.inequality, args.bound, args.samples, args.out, cfg)
        if args.command == "spectral":
            return cmd_spectral(args.inequality, args.samples, args.out, cfg)
        return cmd_theta(args.inequality, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
