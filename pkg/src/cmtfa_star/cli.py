"""Command-line driver.

Reports go to stdout as JSON, diagnostics to stderr. Exit codes:
0 success, 1 verification failure, 2 input error, 3 oracle iteration limit.

``CMTFA_STAR_CONFIG`` may name a JSON file whose keys (``tol``,
``tol_feas``, ``max_iter``, ``objective_tol``, ``entry_tol``) replace the
built-in defaults; explicit flags still win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from . import partition
from .certificate import DEFAULT_TOL, build_certificate
from .closed_form import CmtfaSolution, rank_one_candidate, solve, solve_dm
from .numeric_oracle import compare, solve_cmtfa_numeric
from .star_model import (
    AlphaVector,
    InvalidInputError,
    build_sigma_x,
    classify_dominance,
    estimate_alpha,
    sample_covariance,
    sample_latent,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3

CONFIG_ENV = "CMTFA_STAR_CONFIG"
DEFAULTS: dict[str, Any] = {
    "tol": DEFAULT_TOL,
    "tol_feas": 1e-8,
    "max_iter": 500,
    "objective_tol": 1e-4,
    "entry_tol": 1e-3,
}


class InputError(Exception):
    """Malformed or out-of-range command-line input (exit code 2)."""


# -- serialization ------------------------------------------------------------


def _jsonable(x: Any) -> Any:
    """Convert numpy values to plain JSON types.

    Python's float repr is the shortest string that round-trips exactly, so
    no precision is lost when reports are parsed back.
    """
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(report: dict[str, Any]) -> str:
    return json.dumps(_jsonable(report), allow_nan=True)


def _parse_json_text(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"could not parse {what} as JSON: {exc}") from None


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def read_matrix(path: str, key: str) -> np.ndarray:
    """Load a matrix from JSON (``{key: [[...]]}`` or a bare list) or CSV with a header row."""
    text = _read_text(path)
    if path.lower().endswith(".csv"):
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2:
            raise InputError(f"{path}: CSV needs a header row and at least one data row")
        try:
            data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric CSV entry ({exc})") from None
    else:
        obj = _parse_json_text(text, path)
        if isinstance(obj, dict):
            if key not in obj:
                raise InputError(f"{path}: expected a '{key}' field")
            obj = obj[key]
        try:
            data = np.array(obj, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"{path}: '{key}' must be a numeric matrix") from None
    if data.ndim != 2:
        raise InputError(f"{path}: '{key}' must be two-dimensional")
    return data


def _alpha_from_list(values: Any) -> AlphaVector:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise InputError("alpha must be a list of numbers") from None
    if arr.ndim != 1:
        raise InputError("alpha must be a flat list of numbers")
    try:
        return AlphaVector(arr)
    except InvalidInputError as exc:
        raise InputError(str(exc)) from None


def _parse_alpha_flag(text: str) -> AlphaVector:
    return _alpha_from_list(_parse_json_text(text, "--alpha"))


# -- problem loading ------------------------------------------------------------


def load_problem(args: argparse.Namespace) -> tuple[AlphaVector, dict[str, Any]]:
    """Resolve the problem source into loadings plus an echo of the input.

    The echo is sufficient to reproduce every non-timing field: sample data is
    echoed as its covariance matrix, from which the loadings are estimated.
    """
    sources = [
        name
        for name in ("alpha", "sigma", "data", "input")
        if getattr(args, name, None) is not None
    ]
    if len(sources) != 1:
        raise InputError("give exactly one of --alpha, --sigma, --data, --input")
    src = sources[0]
    if src == "alpha":
        alpha = _parse_alpha_flag(args.alpha)
        return alpha, {"alpha": alpha.values}
    if src == "input":
        obj = _parse_json_text(_read_text(args.input), args.input)
        return problem_from_object(obj)
    if src == "sigma":
        return _from_sigma(read_matrix(args.sigma, "sigma"), {"source": "sigma", "path": args.sigma})
    data = read_matrix(args.data, "data")
    return _from_data(data, {"source": "data", "path": args.data})


def problem_from_object(obj: Any) -> tuple[AlphaVector, dict[str, Any]]:
    if not isinstance(obj, dict):
        raise InputError("problem must be a JSON object")
    present = [k for k in ("alpha", "sigma", "data") if k in obj]
    if len(present) != 1:
        raise InputError("problem must contain exactly one of 'alpha', 'sigma', 'data'")
    key = present[0]
    if key == "alpha":
        alpha = _alpha_from_list(obj["alpha"])
        return alpha, {"alpha": alpha.values}
    try:
        m = np.array(obj[key], dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"'{key}' must be a numeric matrix") from None
    if m.ndim != 2:
        raise InputError(f"'{key}' must be two-dimensional")
    if key == "sigma":
        return _from_sigma(m, {"source": "sigma"})
    return _from_data(m, {"source": "data"})


def _from_sigma(m: np.ndarray, echo: dict[str, Any]) -> tuple[AlphaVector, dict[str, Any]]:
    if m.shape[0] != m.shape[1]:
        raise InputError(f"sigma must be square, got {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-9):
        raise InputError("sigma must be symmetric")
    try:
        alpha = estimate_alpha(m)
    except InvalidInputError as exc:
        raise InputError(str(exc)) from None
    echo = dict(echo, sigma=m)
    return alpha, echo


def _from_data(data: np.ndarray, echo: dict[str, Any]) -> tuple[AlphaVector, dict[str, Any]]:
    if data.shape[0] < 2:
        raise InputError("data needs at least two rows")
    cov = sample_covariance(data)
    echo = dict(echo, n_samples=int(data.shape[0]))
    return _from_sigma(cov, echo)


# -- config ---------------------------------------------------------------------


def load_defaults(environ: dict[str, str] | None = None) -> dict[str, Any]:
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    path = environ.get(CONFIG_ENV)
    if path:
        obj = _parse_json_text(_read_text(path), path)
        if not isinstance(obj, dict):
            raise InputError(f"{path}: config must be a JSON object")
        unknown = set(obj) - set(DEFAULTS)
        if unknown:
            raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg.update(obj)
    return cfg


def _opt(args: argparse.Namespace, name: str, cfg: dict[str, Any]) -> Any:
    value = getattr(args, name, None)
    return cfg[name] if value is None else value


# -- report pieces ------------------------------------------------------------------


class _Timer:
    def __init__(self) -> None:
        self.ms: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[name] = (time.perf_counter() - t0) * 1e3


def _dominance_dict(alpha: AlphaVector) -> dict[str, Any]:
    dom = classify_dominance(alpha)
    return {"label": dom.label, "margin": dom.margin}


def _solution_dict(sol: CmtfaSolution) -> dict[str, Any]:
    return {
        "order": "input",
        "rank_class": sol.rank_class,
        "sigma_t": sol.sigma_t,
        "d": sol.d,
        "trace_sigma_t": sol.trace_sigma_t,
        "objective": sol.objective,
    }


def _candidate(alpha: AlphaVector, which: str) -> CmtfaSolution:
    if which == "rank-one":
        return rank_one_candidate(alpha)
    if which == "rank-n-minus-one":
        return solve_dm(alpha)
    return solve(alpha)


def _oracle_dict(alpha: AlphaVector, sol: CmtfaSolution, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    orc = solve_cmtfa_numeric(build_sigma_x(alpha), tol_feas=cfg["tol_feas"], max_iter=cfg["max_iter"])
    cmp = compare(sol, orc, objective_tol=cfg["objective_tol"], entry_tol=cfg["entry_tol"])
    out = {
        "status": orc.status,
        "objective": orc.objective,
        "d": orc.d,
        "iterations": orc.iterations,
        "min_eig": orc.min_eig,
        "objective_gap": cmp.objective_gap,
        "d_gap": cmp.d_gap,
        "agree": cmp.agree,
    }
    if orc.status != "Optimal":
        return out, EXIT_LIMIT
    return out, EXIT_OK if cmp.agree else EXIT_VERIFY


def run_solve(
    alpha: AlphaVector,
    echo: dict[str, Any],
    certify: bool,
    oracle: bool,
    cfg: dict[str, Any],
) -> dict[str, Any]:
    timer = _Timer()
    report: dict[str, Any] = {"command": "solve", "input": echo}
    with timer.stage("classify"):
        report["dominance"] = _dominance_dict(alpha)
    report["alpha"] = {"order": "input", "values": alpha.values, "sort_perm": alpha.sort_perm}
    with timer.stage("solve"):
        sol = solve(alpha)
    report["solution"] = _solution_dict(sol)
    code = EXIT_OK
    if certify:
        with timer.stage("certify"):
            cert = build_certificate(alpha, tol=cfg["tol"])
        report["certificate"] = {
            "verdict": cert.verdict,
            "tol": cfg["tol"],
            "case_tag": cert.case_tag,
            "row_norm_residual": cert.row_norm_residual,
            "null_residual": cert.null_residual,
            "min_eig": cert.min_eig,
            "columns": int(cert.t_matrix.shape[1]),
            "mu": cert.mu,
        }
        if not cert.verdict:
            code = EXIT_VERIFY
    if oracle:
        with timer.stage("oracle"):
            orc, orc_code = _oracle_dict(alpha, sol, cfg)
        report["oracle"] = orc
        code = max(code, orc_code)
    report["timings_ms"] = timer.ms
    report["exit_code"] = code
    return report


# -- commands ---------------------------------------------------------------------


def cmd_classify(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    alpha, _ = load_problem(args)
    return _dominance_dict(alpha), EXIT_OK


def cmd_solve(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    cfg = dict(cfg, tol=_opt(args, "tol", cfg))
    if args.batch is not None:
        obj = _parse_json_text(_read_text(args.batch), args.batch)
        problems = obj.get("problems") if isinstance(obj, dict) else obj
        if not isinstance(problems, list):
            raise InputError("batch file must be a JSON list of problems or {'problems': [...]}")
        reports = []
        code = EXIT_OK
        for i, prob in enumerate(problems):
            try:
                alpha, echo = problem_from_object(prob)
            except InputError as exc:
                reports.append({"command": "solve", "input": prob, "error": str(exc), "exit_code": EXIT_INPUT})
                code = max(code, EXIT_INPUT)
                continue
            rep = run_solve(alpha, echo, args.certify, args.oracle, cfg)
            reports.append(rep)
            code = max(code, rep["exit_code"])
        return {"command": "solve", "reports": reports, "exit_code": code}, code
    alpha, echo = load_problem(args)
    rep = run_solve(alpha, echo, args.certify, args.oracle, cfg)
    return rep, rep["exit_code"]


def cmd_sample(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any] | None, int]:
    alpha = _parse_alpha_flag(args.alpha)
    if args.n_samples < 1:
        raise InputError("--n-samples must be at least 1")
    batch = sample_latent(alpha, args.n_samples, args.seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(alpha.n)])
    for row in batch.samples:
        writer.writerow([repr(float(v)) for v in row])
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
        return None, EXIT_OK
    try:
        Path(args.out).write_text(buf.getvalue())
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc}") from None
    return {
        "command": "sample",
        "out": args.out,
        "alpha": alpha.values,
        "n_samples": args.n_samples,
        "seed": args.seed,
    }, EXIT_OK


def cmd_estimate(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    alpha, echo = load_problem(args)
    return {
        "command": "estimate",
        "input": echo,
        "alpha": {"order": "input", "values": alpha.values},
        "dominance": _dominance_dict(alpha),
    }, EXIT_OK


def cmd_oracle(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    alpha, echo = load_problem(args)
    tol_feas = _opt(args, "tol_feas", cfg)
    max_iter = _opt(args, "max_iter", cfg)
    t0 = time.perf_counter()
    orc = solve_cmtfa_numeric(build_sigma_x(alpha), tol_feas=tol_feas, max_iter=max_iter)
    report = {
        "command": "oracle",
        "input": echo,
        "status": orc.status,
        "d": orc.d,
        "objective": orc.objective,
        "iterations": orc.iterations,
        "min_eig": orc.min_eig,
        "timings_ms": {"oracle": (time.perf_counter() - t0) * 1e3},
    }
    code = EXIT_OK if orc.status == "Optimal" else EXIT_LIMIT
    report["exit_code"] = code
    return report, code


def cmd_compare(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    alpha, echo = load_problem(args)
    cfg = dict(
        cfg,
        tol_feas=_opt(args, "tol_feas", cfg),
        max_iter=_opt(args, "max_iter", cfg),
        objective_tol=_opt(args, "objective_tol", cfg),
        entry_tol=_opt(args, "entry_tol", cfg),
    )
    try:
        sol = _candidate(alpha, args.candidate)
    except InvalidInputError as exc:
        raise InputError(str(exc)) from None
    orc, code = _oracle_dict(alpha, sol, cfg)
    report = {
        "command": "compare",
        "input": echo,
        "candidate": args.candidate,
        "closed_form": _solution_dict(sol),
        "oracle": orc,
        "exit_code": code,
    }
    return report, code


def cmd_lemmas(args: argparse.Namespace, cfg: dict[str, Any]) -> tuple[dict[str, Any], int]:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    if not 1 <= args.n_max <= partition.MAX_PARTITION_SIZE:
        raise InputError(f"--n-max must lie in [1, {partition.MAX_PARTITION_SIZE}]")
    report = run_lemmas(args.trials, args.n_max, args.seed)
    code = EXIT_OK if not report["violations"] else EXIT_VERIFY
    report["exit_code"] = code
    return report, code


def run_lemmas(trials: int, n_max: int, seed: int) -> dict[str, Any]:
    """Randomized checks of the partition inequalities on positive vectors.

    Sizes are uniform on ``1 .. n_max`` and entries uniform on ``(0, 1]``.
    Single-element vectors count toward the first check only.
    """
    rng = np.random.default_rng(seed)
    counts = {
        "lemma4": [0, 0],
        "lemma5": [0, 0],
        "lemma6": [0, 0],
        "exhaustive_match": [0, 0],
    }
    violations: list[dict[str, Any]] = []
    singletons = 0
    for trial in range(trials):
        n = int(rng.integers(1, n_max + 1))
        e = 1.0 - rng.random(n)
        res = partition.s_min(e)

        def record(name: str, ok: bool, **detail: Any) -> None:
            counts[name][1] += 1
            if ok:
                counts[name][0] += 1
            else:
                violations.append({"check": name, "trial": trial, "seed": seed, "e": e, **detail})

        record("lemma4", partition.lemma4_check(res), s_min=res.s_min, f_min=res.f_min)
        if n <= 12:
            ref = partition.s_min_exhaustive(e)
            record(
                "exhaustive_match",
                abs(ref - res.s_min) <= 1e-12 * max(1.0, float(e.sum())),
                s_min=res.s_min,
                exhaustive=ref,
            )
        if n < 2:
            singletons += 1
            continue
        gap = partition.lemma5_gap(e)
        record("lemma5", gap >= -1e-12, gap=gap)
        cross = partition.lemma6_cross_term(e, res.signs)
        record("lemma6", cross < 0.0, cross_term=cross, signs=res.signs)
    return {
        "command": "lemmas",
        "trials": trials,
        "n_max": n_max,
        "seed": seed,
        "passed": {k: v[0] for k, v in counts.items()},
        "checked": {k: v[1] for k, v in counts.items()},
        "singletons_excluded_from_lemma5_lemma6": singletons,
        "violations": violations,
    }


# -- argument parsing -------------------------------------------------------------


def _add_source(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--alpha", help="loadings as a JSON list, e.g. '[0.9,0.3,0.2]'")
    p.add_argument("--sigma", help="covariance matrix file (JSON {'sigma': [[...]]} or CSV)")
    if data:
        p.add_argument("--data", help="sample matrix file (CSV with header, or JSON {'data': [[...]]})")
    p.add_argument("--input", help="problem JSON file with one of alpha/sigma/data")


def _add_oracle_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-feas", type=float, default=None, help="eigenvalue feasibility tolerance")
    p.add_argument("--max-iter", type=int, default=None, help="cutting-plane iteration limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmtfa-star",
        description="Closed-form CMTFA for star-structured covariances, with certificates and a numerical oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="dominance label and margin")
    _add_source(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="closed-form solution, optionally certified and cross-checked")
    _add_source(p)
    p.add_argument("--batch", help="JSON file with a list of problems")
    p.add_argument("--certify", action="store_true", help="build and verify the optimality certificate")
    p.add_argument("--oracle", action="store_true", help="cross-check against the cutting-plane solver")
    p.add_argument("--tol", type=float, default=None, help="certificate tolerance (default 1e-8)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sample", help="draw samples from the latent star model as CSV")
    p.add_argument("--alpha", required=True)
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path ('-' or omitted for stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate loadings from a covariance or sample matrix")
    _add_source(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("oracle", help="run the cutting-plane solver alone")
    _add_source(p)
    _add_oracle_opts(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", help="closed form versus oracle")
    _add_source(p)
    _add_oracle_opts(p)
    p.add_argument(
        "--candidate",
        choices=["auto", "rank-one", "rank-n-minus-one"],
        default="auto",
        help="which closed form to compare (default: dispatch on dominance)",
    )
    p.add_argument("--objective-tol", type=float, default=None)
    p.add_argument("--entry-tol", type=float, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("lemmas", help="randomized checks of the partition inequalities")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lemmas)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the input-error code
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = load_defaults()
        report, code = args.func(args, cfg)
    except (InputError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report is not None:
        print(dumps(report))
    if code == EXIT_VERIFY:
        print("verification failed", file=sys.stderr)
    elif code == EXIT_LIMIT:
        print("oracle hit its iteration limit", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
