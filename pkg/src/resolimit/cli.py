"""Command-line front end.

Every command writes an RFC-4180 CSV (header row, ``%.17g`` numbers,
``schema_version`` and ``status`` columns) and a JSON sidecar next to it
holding the resolved configuration, the git revision and the wall time.
Sweeps append finished cells to ``<out>.partial`` and skip them on a rerun,
so an interrupted run resumes where it stopped; the final CSV is sorted by
cell key and therefore independent of scheduling.

Exit codes: 0 ok, 2 input validation, 3 I/O, 4 parse, 5 budget exhausted.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import json
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import certificates as cert
from . import converse as cv
from . import tvdual as tv

SCHEMA_VERSION = 1
WORKERS_ENV = "RESOLIMIT_WORKERS"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_BUDGET = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ output


def fmt(value) -> str:
    """CSV cell text; non-finite or missing numbers become ``NA``."""
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "%.17g" % v if math.isfinite(v) else "NA"
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(r.get(c)) for c in columns])
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def git_revision() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    if out.returncode != 0:
        return None
    return out.stdout.strip() or None


def write_sidecar(path: Path, command: str, config: dict, wall: float, summary: dict) -> None:
    doc = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(config),
        "git_revision": git_revision(),
        "wall_time_s": wall,
        "summary": _jsonable(summary),
    }
    try:
        Path(str(path) + ".json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write sidecar for {path}: {exc}") from exc


def check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise CliError(EXIT_IO, f"output directory {parent} is missing or not writable")
    if path.exists() and not os.access(path, os.W_OK):
        raise CliError(EXIT_IO, f"output file {path} is not writable")


@dataclass
class Checkpoint:
    """Append-only JSON-lines store of finished cells, keyed by a string."""

    path: Path
    done: dict = field(default_factory=dict)

    @classmethod
    def open(cls, out: Path, resume: bool) -> "Checkpoint":
        cp = cls(Path(str(out) + ".partial"))
        if resume and cp.path.exists():
            with open(cp.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        # a torn final line from an interrupted write
                        continue
                    cp.done[rec["key"]] = rec["row"]
        elif cp.path.exists():
            cp.path.unlink()
        return cp

    def add(self, key: str, row: dict) -> None:
        self.done[key] = row
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"key": key, "row": _jsonable(row)}) + "\n")
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write checkpoint {self.path}: {exc}") from exc

    def close(self) -> None:
        if self.path.exists():
            self.path.unlink()


def run_cells(
    keys: Sequence[str],
    work: Callable,
    args_for: Callable[[str], tuple],
    cp: Checkpoint,
    workers: int,
) -> None:
    """Run unfinished cells, serialising checkpoint writes in this process."""
    todo = [k for k in keys if k not in cp.done]
    if workers <= 1 or len(todo) <= 1:
        for k in todo:
            cp.add(k, work(*args_for(k)))
        return
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        futs = {pool.submit(work, *args_for(k)): k for k in todo}
        for fut in cf.as_completed(futs):
            cp.add(futs[fut], fut.result())


# ------------------------------------------------------------------ parsing


def float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def int_list(text) -> list[int]:
    vals = float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def float_range(spec) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma list."""
    if isinstance(spec, str) and ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {spec!r}")
        a, b, h = (float(p) for p in parts)
        if h <= 0 or b < a:
            raise argparse.ArgumentTypeError(f"empty range {spec!r}")
        n = int(math.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 12) for i in range(n + 1)]
    return float_list(spec)


def read_support_file(path: Path) -> list[float]:
    """One torus coordinate per line; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read support file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}: not UTF-8 text ({exc})") from exc
    pts = []
    for no, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            v = float(body)
        except ValueError:
            raise CliError(EXIT_PARSE, f"{path}:{no}: expected one decimal coordinate, got {body!r}") from None
        if not math.isfinite(v):
            raise CliError(EXIT_PARSE, f"{path}:{no}: coordinate must be finite, got {body!r}")
        pts.append(v)
    if not pts:
        raise CliError(EXIT_PARSE, f"{path}: no coordinates found")
    return pts


def parse_pattern(text: str, s: int) -> np.ndarray:
    try:
        vals = np.array([complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"cannot parse sign pattern {text!r}: {exc}") from exc
    if vals.size != s:
        raise CliError(EXIT_VALIDATION, f"sign pattern has {vals.size} entries, support has {s}")
    return vals


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(EXIT_VALIDATION, f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise CliError(EXIT_VALIDATION, f"{WORKERS_ENV} must be positive, got {n}")
    return n


# ----------------------------------------------------------------- commands


CONSTRUCT_COLUMNS = [
    "schema_version", "status", "m", "delta", "index", "point", "alpha", "beta",
    "spacing", "Delta", "eta",
]
Z_COLUMNS = ["schema_version", "status", "k", "re", "im", "log10_abs"]


def cmd_construct(a: argparse.Namespace) -> dict:
    try:
        params = cv.ConverseParams(a.m, a.delta)
    except cv.InvalidParameters as exc:
        raise CliError(EXIT_VALIDATION, f"invalid construction parameters: {exc}") from exc
    out = Path(a.out)
    check_writable(out)
    X = cv.build_support(params)
    l = cv.center_index(params)
    # the rational construction gives the separation without rounding in the differences
    Delta = float(cv.exact_min_separation(cv.build_support_exact(params.m, Fraction(params.delta))))
    rows = []
    for j, x in enumerate(X.points):
        rows.append(
            dict(
                schema_version=SCHEMA_VERSION, status="ok", m=params.m, delta=params.delta, index=j,
                point=float(x), alpha=params.alpha, beta=params.beta, spacing=params.spacing,
                Delta=Delta, eta=cv.eta(X, j),
            )
        )
    write_csv(out, CONSTRUCT_COLUMNS, rows)

    Z = cv.z_converse(params)
    with np.errstate(divide="ignore"):
        logabs = np.log10(np.abs(Z.coeffs))
    summary: dict = {
        "m": params.m,
        "delta": params.delta,
        "alpha": params.alpha,
        "beta": params.beta,
        "Delta": Delta,
        "center_index": l,
        "eta_center": cv.eta(X, l),
        "z_degree": Z.degree,
        "z_log10_abs_max": float(np.max(logabs)),
        "z_log10_abs_min": float(np.min(logabs[np.isfinite(logabs)])) if np.isfinite(logabs).any() else None,
    }
    if params.m <= a.z_table_max:
        zrows = [
            dict(schema_version=SCHEMA_VERSION, status="ok", k=int(k), re=c.real, im=c.imag, log10_abs=float(la))
            for k, c, la in zip(Z.frequencies, Z.coeffs, logabs)
        ]
        zpath = out.with_name(out.stem + "_z" + out.suffix)
        write_csv(zpath, Z_COLUMNS, zrows)
        summary["z_table"] = str(zpath)

    gamma = a.gamma
    if gamma is None:
        try:
            gamma = cv.L_numeric(params).gamma
        except cv.BudgetExceeded:
            gamma = 0.0
    P = cv.p_converse(params, gamma, Z)
    try:
        fc = cert.forced_factor_check(X, l, P)
        summary["factorization"] = {
            "gamma": gamma,
            "residual": fc.residual,
            "value_error": fc.value_error,
            "slope_error": fc.slope_error,
            "status": "ok",
        }
    except (ValueError, cert.FactorizationFailed) as exc:
        summary["factorization"] = {"gamma": gamma, "status": "failed", "message": str(exc)}
    summary["interpolation_residuals"] = cv.interpolation_residuals(params, gamma)
    return summary


MDELTA_COLUMNS = [
    "schema_version", "status", "delta", "mode", "M_delta", "M_delta_direct", "log_M_delta",
    "delta_minus_2_times_log_M", "message",
]


def _mdelta_cell(delta: float, mode: str, cap: int) -> dict:
    row = dict(schema_version=SCHEMA_VERSION, delta=delta, mode=mode)
    try:
        if mode == "analytic":
            M = cv.m_delta_envelope(delta)
            row["M_delta_direct"] = cv.m_delta_threshold(delta, "analytic")
        else:
            M = cv.m_delta_threshold(delta, "numeric", cap=cap)
            row["M_delta_direct"] = M
    except cv.InvalidParameters as exc:
        row.update(status="failed", message=str(exc))
        return row
    except (cv.ThresholdNotFound, cv.BudgetExceeded) as exc:
        row.update(status="inconclusive", message=str(exc))
        return row
    logM = math.log(M)
    row.update(status="ok", M_delta=M, log_M_delta=logM, delta_minus_2_times_log_M=(delta - 2.0) * logM, message="")
    return row


def cmd_mdelta_curve(a: argparse.Namespace) -> dict:
    out = Path(a.out)
    check_writable(out)
    if a.mode not in ("analytic", "numeric"):
        raise CliError(EXIT_VALIDATION, f"mode must be analytic or numeric, got {a.mode!r}")
    cp = Checkpoint.open(out, a.resume)
    keys = [f"{d!r}" for d in a.deltas]
    run_cells(keys, _mdelta_cell, lambda k: (float(k), a.mode, a.cap), cp, worker_count())
    rows = sorted(cp.done.values(), key=lambda r: r["delta"])
    write_csv(out, MDELTA_COLUMNS, rows)
    cp.close()
    ok = [r for r in rows if r["status"] == "ok"]
    Ms = [r["M_delta"] for r in ok]
    return {
        "rows": len(rows),
        "failed": sum(r["status"] == "failed" for r in rows),
        "inconclusive": sum(r["status"] == "inconclusive" for r in rows),
        "monotone_nonincreasing": all(b <= a_ for a_, b in zip(Ms, Ms[1:])),
    }


CERTIFY_COLUMNS = [
    "schema_version", "status", "pattern_index", "pattern", "kernel_valid", "kernel_interp_residual",
    "kernel_off_support_max", "feasibility", "best_offmax", "lower_bound", "threshold", "guard",
    "iterations", "message",
]


def _pattern_text(u: np.ndarray) -> str:
    return ";".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in u)


def _certify_cell(points: list[float], u: np.ndarray, m: int, grid_factor: int, max_iter: int, tol: float) -> dict:
    X = cv.SupportSet(points)
    row = dict(schema_version=SCHEMA_VERSION, pattern=_pattern_text(u), message="")
    try:
        rep = cert.construct_certificate(X, u, m)
        row.update(kernel_valid=rep.valid, kernel_interp_residual=rep.interp_residual,
                   kernel_off_support_max=rep.off_support_max)
    except cert.DegenerateSupport as exc:
        row.update(kernel_valid=False, message=f"kernel interpolation: {exc}")
    fr = cert.certificate_feasibility(X, u, m, grid_n=grid_factor * (2 * m + 1), max_iter=max_iter, tol=tol)
    status = {"feasible": "ok", "infeasible": "failed"}.get(fr.status, "inconclusive")
    row.update(status=status, feasibility=fr.status, best_offmax=fr.best_offmax, lower_bound=fr.lower_bound,
               threshold=fr.threshold, guard=fr.guard, iterations=fr.iterations)
    return row


def certify_verdict(statuses: Sequence[str]) -> str:
    if any(s == "failed" for s in statuses):
        return "some-infeasible"
    if any(s == "inconclusive" for s in statuses):
        return "inconclusive-present"
    return "all-feasible"


def cmd_certify(a: argparse.Namespace) -> dict:
    out = Path(a.out)
    pts = read_support_file(Path(a.support))
    try:
        X = cv.SupportSet(pts)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, f"invalid support: {exc}") from exc
    if a.m < 1:
        raise CliError(EXIT_VALIDATION, f"degree must be positive, got {a.m}")
    if X.s > a.m:
        raise CliError(EXIT_VALIDATION, f"{X.s} nodes exceed the degree m={a.m}")
    if a.grid_factor < 8:
        raise CliError(EXIT_VALIDATION, "grid factor must be at least 8")
    check_writable(out)
    if a.pattern == "fourier-sweep":
        patterns = cert.fourier_patterns(X.s)
    elif a.pattern == "random":
        if a.seed is None:
            raise CliError(EXIT_VALIDATION, "random patterns need --seed")
        rng = np.random.default_rng(a.seed)
        patterns = [cert.random_pattern(X.s, rng) for _ in range(a.count)]
    else:
        patterns = [parse_pattern(a.pattern, X.s)]
    for u in patterns:
        try:
            cert.sign_pattern(u)
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, f"invalid sign pattern: {exc}") from exc

    cp = Checkpoint.open(out, a.resume)
    keys = [f"{j:06d}" for j in range(len(patterns))]
    args_for = lambda k: (list(X.points), patterns[int(k)], a.m, a.grid_factor, a.max_iter, a.tol)  # noqa: E731
    try:
        run_cells(keys, _certify_cell, args_for, cp, worker_count())
    except cert.DegenerateSupport as exc:
        raise CliError(EXIT_VALIDATION, f"degenerate support: {exc}") from exc
    rows = []
    for k in sorted(cp.done):
        r = dict(cp.done[k])
        r["pattern_index"] = int(k)
        rows.append(r)
    write_csv(out, CERTIFY_COLUMNS, rows)
    cp.close()
    verdict = certify_verdict([r["status"] for r in rows])
    print(f"verdict: {verdict}")
    return {"verdict": verdict, "s": X.s, "min_separation": X.min_separation, "patterns": len(rows)}


PHASE_COLUMNS = [
    "schema_version", "status", "m", "delta", "delta_m", "trials", "successes", "inconclusive",
    "success_rate",
]


def _phase_trial(m: int, delta: float, trial: int, seed: int, spikes: int, grid_factor: int) -> dict:
    cfg = tv.PhaseConfig(spikes=spikes, grid_factor=grid_factor)
    return tv.run_cell(m, delta, trial, seed, cfg)


def cmd_phase(a: argparse.Namespace) -> dict:
    if a.trials < 1:
        raise CliError(EXIT_VALIDATION, f"trials must be at least 1, got {a.trials}")
    if any(m < 1 for m in a.m):
        raise CliError(EXIT_VALIDATION, "every m must be positive")
    if a.grid_factor < 8:
        raise CliError(EXIT_VALIDATION, "grid factor must be at least 8")
    cells = []
    for m in sorted(set(a.m)):
        for dm in sorted(set(a.delta_m)):
            delta = dm / m
            if not 0 < delta < 0.5:
                raise CliError(EXIT_VALIDATION, f"separation {dm}/{m} must lie in (0, 1/2)")
            cells.append((m, dm, delta))
    out = Path(a.out)
    check_writable(out)
    cp = Checkpoint.open(out, a.resume)
    lookup = {}
    for m, dm, delta in cells:
        for t in range(a.trials):
            key = f"{m:06d}/{dm!r}/{t:06d}"
            lookup[key] = (m, delta, t, a.seed, a.spikes, a.grid_factor)
    run_cells(sorted(lookup), _phase_trial, lookup.__getitem__, cp, worker_count())

    rows = []
    for m, dm, delta in cells:
        recs = [cp.done[f"{m:06d}/{dm!r}/{t:06d}"] for t in range(a.trials)]
        agg = tv.aggregate(m, delta, recs)
        agg["delta_m"] = dm
        agg["schema_version"] = SCHEMA_VERSION
        agg["status"] = "inconclusive" if agg["inconclusive"] else "ok"
        rows.append(agg)
    write_csv(out, PHASE_COLUMNS, rows)

    # gnuplot "nonuniform matrix": first row holds the column coordinates
    dms = sorted(set(a.delta_m))
    ms = sorted(set(a.m))
    rate = {(r["m"], r["delta_m"]): r["success_rate"] for r in rows}
    mpath = out.with_suffix(".matrix.dat")
    try:
        with open(mpath, "w", encoding="utf-8") as fh:
            fh.write("# nonuniform matrix: rows m, columns delta*m, entries success rate\n")
            fh.write(" ".join([str(len(dms))] + ["%.17g" % d for d in dms]) + "\n")
            for m in ms:
                fh.write(" ".join([str(m)] + ["%.17g" % rate[(m, d)] for d in dms]) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {mpath}: {exc}") from exc
    cp.close()
    return {"cells": len(rows), "matrix": str(mpath)}


FACTS_COLUMNS = [
    "schema_version", "status", "m", "delta", "alpha", "fact1_min_margin", "fact1_holds", "cot_sum",
    "cot_bound", "cot_margin", "fact2_cot_holds", "csc2_sum", "csc2_bound", "csc2_margin",
    "fact2_csc2_holds",
]


def cmd_facts_check(a: argparse.Namespace) -> dict:
    out = Path(a.out)
    grid = []
    for m in a.m:
        for d in a.delta:
            try:
                grid.append(cv.ConverseParams(m, d))
            except cv.InvalidParameters as exc:
                raise CliError(EXIT_VALIDATION, f"invalid parameters: {exc}") from exc
    check_writable(out)
    out_rows = []
    for params in grid:
        rep = cv.verify_facts(params.m, params.alpha, a.grid, a.grid)
        ok = rep.fact1_holds and rep.fact2_cot_holds and rep.fact2_csc2_holds
        out_rows.append(
            dict(
                schema_version=SCHEMA_VERSION, status="ok" if ok else "failed", m=params.m, delta=params.delta,
                alpha=params.alpha, fact1_min_margin=rep.fact1_min_margin, fact1_holds=rep.fact1_holds,
                cot_sum=rep.cot_sum, cot_bound=rep.cot_bound, cot_margin=rep.cot_margin,
                fact2_cot_holds=rep.fact2_cot_holds, csc2_sum=rep.csc2_sum, csc2_bound=rep.csc2_bound,
                csc2_margin=rep.csc2_margin, fact2_csc2_holds=rep.fact2_csc2_holds,
            )
        )
    write_csv(out, FACTS_COLUMNS, out_rows)
    return {
        "rows": len(out_rows),
        "fact1_all": all(r["fact1_holds"] for r in out_rows),
        "fact2_cot_all": all(r["fact2_cot_holds"] for r in out_rows),
        "fact2_csc2_all": all(r["fact2_csc2_holds"] for r in out_rows),
    }


BOUND_LINKS = ["L>=L_omega", "L_omega>=zinf*kappa", "zinf>=lemma", "kappa>=analytic", "zinf*kappa>=analytic_bound"]
BOUNDS_COLUMNS = [
    "schema_version", "status", "m", "delta", "L_numeric", "gamma_star", "L_omega", "ztilde_inf",
    "ztilde_lemma_bound", "kappa_numeric", "kappa_analytic", "C_delta", "analytic_lower_bound",
    *BOUND_LINKS, "message",
]


def _bounds_cell(m: int, delta: float, with_L: bool) -> dict:
    row = dict(schema_version=SCHEMA_VERSION, m=m, delta=delta, message="")
    try:
        rep = cv.bound_report(cv.ConverseParams(m, delta), with_L=with_L)
    except cv.BudgetExceeded as exc:
        row.update(status="inconclusive", message=str(exc))
        return row
    row.update(
        status="ok" if rep.chain_holds else "failed", L_numeric=rep.numeric_L, gamma_star=rep.gamma_star,
        L_omega=rep.L_omega, ztilde_inf=rep.ztilde_inf, ztilde_lemma_bound=rep.ztilde_lemma_bound,
        kappa_numeric=rep.kappa_numeric, kappa_analytic=rep.kappa_analytic, C_delta=rep.C_delta,
        analytic_lower_bound=rep.analytic_lower_bound,
    )
    row.update(rep.links)
    return row


def cmd_bounds(a: argparse.Namespace) -> dict:
    for m in a.m:
        for d in a.delta:
            try:
                cv.ConverseParams(m, d)
            except cv.InvalidParameters as exc:
                raise CliError(EXIT_VALIDATION, f"invalid parameters: {exc}") from exc
    out = Path(a.out)
    check_writable(out)
    cp = Checkpoint.open(out, a.resume)
    lookup = {f"{m:06d}/{d!r}": (m, d, not a.no_L) for m in sorted(set(a.m)) for d in sorted(set(a.delta))}
    run_cells(sorted(lookup), _bounds_cell, lookup.__getitem__, cp, worker_count())
    rows = [cp.done[k] for k in sorted(lookup)]
    write_csv(out, BOUNDS_COLUMNS, rows)
    cp.close()
    return {
        "rows": len(rows),
        "violations": sum(r["status"] == "failed" for r in rows),
        "inconclusive": sum(r["status"] == "inconclusive" for r in rows),
    }


# ------------------------------------------------------------------- parser


COMMANDS: dict[str, Callable[[argparse.Namespace], dict]] = {
    "construct": cmd_construct,
    "mdelta-curve": cmd_mdelta_curve,
    "certify": cmd_certify,
    "phase": cmd_phase,
    "facts-check": cmd_facts_check,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resolimit", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="JSON file of option defaults; explicit flags take precedence")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", required=True, help="CSV output path (a .json sidecar is written next to it)")
        return sp

    sp = add("construct", "equispaced converse support, its parameters and factorization report")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=None, help="R_gamma parameter (default: the minimizer of L)")
    sp.add_argument("--z-table-max", type=int, default=201, help="largest m whose Z coefficients are tabulated")

    sp = add("mdelta-curve", "threshold M_delta over a grid of delta")
    sp.add_argument("--deltas", type=float_range, default=float_range("2.1:4.0:0.1"),
                    help="start:stop:step or comma list")
    sp.add_argument("--mode", default="analytic", choices=["analytic", "numeric"])
    sp.add_argument("--cap", type=int, default=2001, help="largest m scanned in numeric mode")
    sp.add_argument("--resume", action="store_true")

    sp = add("certify", "certificate construction and feasibility per sign pattern")
    sp.add_argument("--support", required=True, help="text file, one coordinate per line, # comments")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--pattern", default="fourier-sweep",
                    help="fourier-sweep, random, or an explicit comma list of unit complex numbers")
    sp.add_argument("--count", type=int, default=8, help="number of random patterns")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--grid-factor", type=int, default=8)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--resume", action="store_true")

    sp = add("phase", "empirical TV recovery rate over (m, delta*m)")
    sp.add_argument("--m", type=int_list, default=[16, 32, 64])
    sp.add_argument("--delta-m", type=float_range, default=float_range("0.5:3.0:0.25"),
                    help="separations times m: start:stop:step or comma list")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--spikes", type=int, default=4)
    sp.add_argument("--grid-factor", type=int, default=8)
    sp.add_argument("--resume", action="store_true")

    sp = add("facts-check", "numerical scan of the two elementary inequalities")
    sp.add_argument("--m", type=int_list, default=[9, 21, 51, 101, 201])
    sp.add_argument("--delta", type=float_list, default=[2.2, 2.5, 3.0])
    sp.add_argument("--grid", type=int, default=200, help="(t, h) scan resolution per axis")

    sp = add("bounds", "lower-bound chain for L(m, delta)")
    sp.add_argument("--m", type=int_list, default=[9, 21, 51, 101, 201])
    sp.add_argument("--delta", type=float_list, default=[2.2, 2.5, 3.0])
    sp.add_argument("--no-L", action="store_true", help="skip the direct computation of L")
    sp.add_argument("--resume", action="store_true")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {known.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{known.config}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(cfg, dict):
        raise CliError(EXIT_PARSE, f"{known.config}: top level must be an object")
    ns = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[ns.command]  # noqa: SLF001
    dests = {a.dest: a for a in sub._actions}  # noqa: SLF001
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest == "help":
            raise CliError(EXIT_VALIDATION, f"config key {key!r} is not an option of {ns.command}")
        if dest in explicit:
            continue
        action = dests[dest]
        if action.type is not None and not isinstance(value, bool):
            try:
                value = action.type(value)
            except (argparse.ArgumentTypeError, ValueError, TypeError) as exc:
                raise CliError(EXIT_VALIDATION, f"config key {key!r}: {exc}") from exc
        setattr(ns, dest, value)
    return ns


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = _apply_config(parser, argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    start = time.perf_counter()
    try:
        summary = COMMANDS[ns.command](ns)
        config = {k: v for k, v in vars(ns).items() if k != "config"}
        write_sidecar(Path(ns.out), ns.command, config, time.perf_counter() - start, summary)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except cv.BudgetExceeded as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except cv.InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
