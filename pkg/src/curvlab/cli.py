"""Command-line front end.

Exit codes: 0 when every verdict passes (or, for the corpus, matches its
expectation), 1 on a failed verdict, 2 on usage or input errors, 3 when the
evaluation itself breaks down.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .corpus import corpus_list, corpus_run, emit_cases, get_case
from .dsl import MetricFile, parse_metric_file
from .errors import CurvlabError, EvaluationError, MetricFileError, ParseError
from .extension import PSI, Mode, extend
from .reports import DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOL, NoValidPointsError, Report, SamplePlan, map_points
from .residuals import SYSTEMS, SystemId, residual_scan
from .tensor import bundle_at, laplace_one_form_at
from .verdicts import check_constant_curvature, check_flat, check_symmetric

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_EVAL = 0, 1, 2, 3
DEFAULT_BOX = (-1.0, 1.0)


class UsageError(CurvlabError):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, help=f"sample points (default: file plan or {DEFAULT_POINTS})")
    p.add_argument("--seed", type=int, help=f"sampling seed (default: file plan or {DEFAULT_SEED})")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="pass threshold (default: %(default)g)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvlab", description="Sampled curvature and PDE residual checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="constant curvature, flatness or local symmetry of a metric")
    p.add_argument("file")
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, help="curvature constant")
    lam.add_argument("--estimate", action="store_true", help="fit lambda from the curvature")
    p.add_argument("--kind", choices=("curvature", "flat", "symmetric"), default="curvature")
    _common(p)

    p = sub.add_parser("residual", help="residual of one of the PDE systems on the file's fields")
    p.add_argument("file")
    p.add_argument("--system", required=True, choices=[s.value for s in SystemId])
    p.add_argument("--variant")
    p.add_argument("--lambda", dest="lam", type=float, help="overrides lambda from [params]")
    _common(p)

    p = sub.add_parser("cs", help="Chern-Simons density over the sample plan (passes when it vanishes)")
    p.add_argument("file")
    p.add_argument("--normalized", action="store_true", help="divide by sqrt|det g|")
    _common(p)

    p = sub.add_parser("extend", help="six-dimensional Riemann extension of a 3D metric")
    p.add_argument("file")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.LEVI_CIVITA.value)
    p.add_argument("--check", dest="what", choices=("flat", "symmetric", "bundle"), default="symmetric")
    p.add_argument(
        "--cross-sign", type=int, choices=(1, -1), default=1, help="sign of the dx dpsi block (default: %(default)s)"
    )
    _common(p)

    p = sub.add_parser("laplace1", help="one-form Laplacian eigen-equation residual")
    p.add_argument("file")
    p.add_argument("--lambda", dest="lam", type=float, help="eigenvalue (default: lambda from [params])")
    p.add_argument("--form", default="w", help="name of the one-form in [fields] (default: %(default)s)")
    _common(p)

    p = sub.add_parser("corpus", help="built-in cases")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("list")
    q.add_argument("--json", action="store_true")
    q.add_argument("--output", "-o")
    q = csub.add_parser("run")
    q.add_argument("name", nargs="?", default="all")
    q.add_argument("--json", action="store_true")
    q.add_argument("--output", "-o")
    q = csub.add_parser("emit", help="write every case file into a directory")
    q.add_argument("directory")
    return parser


# --- inputs ---------------------------------------------------------------


def _load(path: str) -> MetricFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_metric_file(text)


def _metric(mf: MetricFile, path: str):
    if mf.metric is None:
        raise UsageError(f"{path} has no [metric] section")
    return mf.metric


def _plan(mf: MetricFile, coords: Sequence[str], args, extra_boxes=None) -> SamplePlan:
    """Sample plan from the file's [plan] section, with command-line overrides."""
    try:
        plan = SamplePlan.from_mapping(mf.plan, mf.params)
    except (ValueError, EvaluationError) as exc:
        raise UsageError(f"bad [plan] section: {exc}") from exc
    boxes = dict(plan.boxes)
    if not boxes:
        boxes = {c: DEFAULT_BOX for c in mf.coords}
    for k, v in (extra_boxes or {}).items():
        boxes.setdefault(k, v)
    changes = {"boxes": {c: boxes[c] for c in coords if c in boxes}}
    if args.points is not None:
        changes["n_points"] = args.points
    if args.seed is not None:
        changes["seed"] = args.seed
    try:
        return dataclasses.replace(plan, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _case_name(mf: MetricFile, path: str) -> str:
    return mf.meta.get("name", Path(path).stem)


# --- subcommands ----------------------------------------------------------


def _cmd_check(args) -> list[Report]:
    mf = _load(args.file)
    m = _metric(mf, args.file)
    plan = _plan(mf, m.coords, args)
    name = _case_name(mf, args.file)
    if args.kind == "flat":
        return [check_flat(m, plan, args.tol, name)]
    if args.kind == "symmetric":
        return [check_symmetric(m, plan, args.tol, name)]
    if args.lam is None and not args.estimate:
        raise UsageError("check --kind curvature needs --lambda L or --estimate")
    return [check_constant_curvature(m, "estimate" if args.estimate else args.lam, plan, args.tol, name)]


def _cmd_residual(args) -> list[Report]:
    mf = _load(args.file)
    params = dict(mf.params)
    if args.lam is not None:
        params["lambda"] = args.lam
    plan = _plan(mf, ("x", "y", "z"), args)
    if tuple(mf.coords) != ("x", "y", "z"):
        raise UsageError("residual systems are written in coordinates x y z")
    allowed = SYSTEMS[SystemId(args.system)].variants
    if args.variant is not None and args.variant not in allowed:
        raise UsageError(f"system {args.system} has variants {list(allowed)}, got {args.variant!r}")
    try:
        return [residual_scan(args.system, mf.fields, params, plan, args.tol, args.variant, _case_name(mf, args.file))]
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _cmd_cs(args) -> list[Report]:
    mf = _load(args.file)
    m = _metric(mf, args.file)
    if m.dim != 3:
        raise UsageError("the Chern-Simons density needs a 3-dimensional metric")
    plan = _plan(mf, m.coords, args)

    def one(p):
        b = bundle_at(m, p, cs=True)
        return float(abs(b.cs_normalized if args.normalized else b.cs))

    per_point = map_points(one, plan.points(m.coords))
    variant = "normalized" if args.normalized else "raw"
    return [
        Report(
            _case_name(mf, args.file),
            f"cs_density[{variant}]",
            args.tol,
            per_point,
            len(per_point),
            notes=[plan.describe(), "residual is |CS density|; the check passes when it vanishes"],
        )
    ]


def _cmd_extend(args) -> list[Report]:
    mf = _load(args.file)
    base = _metric(mf, args.file)
    if base.dim != 3:
        raise UsageError("extension needs a 3-dimensional base metric")
    try:
        six = extend(base, args.mode, cross_sign=float(args.cross_sign))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    plan = _plan(mf, six.coords, args, extra_boxes={p: DEFAULT_BOX for p in PSI})
    name = f"{_case_name(mf, args.file)}[ext:{args.mode}]"
    note = f"extension mode {args.mode}, dx dpsi sign {args.cross_sign:+d}"
    if args.what == "flat":
        reports = [check_flat(six, plan, args.tol, name)]
    elif args.what == "symmetric":
        reports = [check_symmetric(six, plan, args.tol, name)]
    else:
        reports = [check_flat(six, plan, args.tol, name), check_symmetric(six, plan, args.tol, name)]
        for r in reports:
            r.notes.append("bundle mode records both verdicts; the exit status does not depend on them")
    for r in reports:
        r.notes.append(note)
        if "signatures" in r.extra:
            sig = "; ".join(
                "(" + ",".join("+" if s > 0 else "-" if s < 0 else "0" for s in t) + ")" for t in r.extra["signatures"]
            )
            r.notes.append(f"metric eigenvalue signs: {sig}")
        r.notes.append(f"max |R| = {r.extra['max_abs_riemann']:.3e}")
    return reports


def _cmd_laplace1(args) -> list[Report]:
    mf = _load(args.file)
    m = _metric(mf, args.file)
    if args.form not in mf.forms:
        raise UsageError(f"{args.file} has no one-form {args.form!r} (lines like '{args.form} 1 = ...')")
    w = mf.forms[args.form]
    lam = args.lam if args.lam is not None else mf.params.get("lambda")
    if lam is None:
        raise UsageError("laplace1 needs --lambda L or a lambda entry in [params]")
    plan = _plan(mf, m.coords, args)
    per_point = map_points(lambda p: float(np.max(np.abs(laplace_one_form_at(m, w, p, lam)))), plan.points(m.coords))
    return [
        Report(
            _case_name(mf, args.file),
            "laplace1",
            args.tol,
            per_point,
            len(per_point),
            lam=lam,
            notes=[plan.describe(), "residual is g^ij nabla_i nabla_j w_k - R^l_k w_l + lambda w_k"],
        )
    ]


# --- output ---------------------------------------------------------------


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _render_reports(reports: list[Report], as_json: bool) -> str:
    if as_json:
        payload = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
        return json.dumps(payload, indent=2)
    return "\n\n".join(r.to_text() for r in reports)


def _corpus(args) -> int:
    if args.action == "emit":
        paths = emit_cases(args.directory)
        sys.stderr.write(f"wrote {len(paths)} files to {args.directory}\n")
        return EXIT_OK
    if args.action == "list":
        names = corpus_list()
        if args.json:
            text = json.dumps([{"name": n, "summary": get_case(n).summary} for n in names], indent=2)
        else:
            text = "\n".join(f"{n:24s} {get_case(n).summary}" for n in names)
        _emit(text, args.output)
        return EXIT_OK
    try:
        results = corpus_run(args.name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    if args.json:
        text = json.dumps([r.to_dict() for r in results], indent=2)
    else:
        lines = []
        for r in results:
            flag = "ok" if r.matched else "MISMATCH"
            lines.append(
                f"{r.case:24s} {r.label:40s} {r.report.verdict:4s} expected {r.expect.outcome:6s} "
                f"[{r.expect.provenance}] {flag}  max={r.report.max_abs_residual:.2e}"
            )
        bad = sum(not r.matched for r in results)
        lines.append(f"{len(results)} checks, {bad} mismatches")
        text = "\n".join(lines)
    _emit(text, args.output)
    return EXIT_OK if all(r.matched for r in results) else EXIT_FAIL


COMMANDS = {
    "check": _cmd_check,
    "residual": _cmd_residual,
    "cs": _cmd_cs,
    "extend": _cmd_extend,
    "laplace1": _cmd_laplace1,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "corpus":
            return _corpus(args)
        reports = COMMANDS[args.command](args)
    except (UsageError, MetricFileError, ParseError) as exc:
        sys.stderr.write(f"curvlab: error: {exc}\n")
        return EXIT_USAGE
    except (EvaluationError, NoValidPointsError, FloatingPointError, ZeroDivisionError) as exc:
        sys.stderr.write(f"curvlab: evaluation failed: {exc}\n")
        return EXIT_EVAL
    _emit(_render_reports(reports, args.json), args.output)
    if args.command == "extend" and args.what == "bundle":
        return EXIT_OK
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
