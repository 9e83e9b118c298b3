"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import builtins as bi
from . import cubature, experiments, refquad
from .errors import InvalidArgument, NumericalError
from .orthogonalization import DEFAULT_CAP, OrthonormalBasis, gram_schmidt
from .projection import comparison_check, decay_report, project, tail_norms
from .weights import load_config

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


@dataclass
class RunConfig:
    command: str
    subcommand: str | None
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def _common(p, out_required=True):
    p.add_argument("--oracle-tol", type=_positive_float, default=refquad.DEFAULT_TOL)
    p.add_argument("--threads", type=_positive_int, default=None)
    p.add_argument("--out", required=out_required)


def _weight_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--builtin", help="builtin weight name")
    g.add_argument("--config", help="JSON file with 'weight' and 'domain'")


def _optimizer(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=_positive_int, default=cubature.OptimizerConfig.restarts)
    p.add_argument("--max-iters", type=_positive_int, default=cubature.OptimizerConfig.max_iters)
    p.add_argument("--trials", type=_positive_int, default=None)
    p.add_argument("--no-polish", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="specweight", description="Orthogonal polynomials and cubature for custom weights.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("basis", help="build an orthonormal basis")
    _weight_source(p)
    p.add_argument("--degree", type=_nonneg_int, required=True)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP)
    _common(p)

    p = sub.add_parser("project", help="expand a builtin function in a saved basis")
    p.add_argument("--basis", required=True)
    p.add_argument("--function", required=True)
    _common(p)

    p = sub.add_parser("compare", help="tail-norm comparison between two weights")
    p.add_argument("--builtin1", required=True)
    p.add_argument("--builtin2", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--degree", type=_nonneg_int, required=True)
    p.add_argument("--C", type=_positive_float, default=None)
    _common(p)

    cub = sub.add_parser("cubature", help="build, apply or verify cubature rules")
    csub = cub.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = csub.add_parser("build")
    p.add_argument("--basis", required=True)
    p.add_argument("--size", type=_positive_int, default=None)
    _optimizer(p)
    _common(p)
    p = csub.add_parser("apply")
    p.add_argument("--rule", required=True)
    p.add_argument("--function", required=True)
    _common(p, out_required=False)
    p = csub.add_parser("verify-theta")
    p.add_argument("--rule", required=True)
    p.add_argument("--basis", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--theta", type=_positive_float, required=True)
    _common(p)

    exp = sub.add_parser("exp", help="run an experiment")
    esub = exp.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = esub.add_parser("decay")
    p.add_argument("--example", type=int, choices=sorted(experiments.DECAY_EXAMPLES), required=True)
    p.add_argument("--degree", type=_nonneg_int, default=None)
    _common(p)
    p = esub.add_parser("gfun")
    p.add_argument("--degree", type=_nonneg_int, default=22)
    _common(p)
    p = esub.add_parser("lshape")
    p.add_argument("--degree", type=_positive_int, default=4, help="highest local degree (1..degree)")
    p.add_argument("--reference", default=None, help="CSV of reference errors to align cells against")
    _common(p)
    p = esub.add_parser("integrate")
    p.add_argument("--example", type=int, choices=sorted(experiments.INTEGRATION_EXAMPLES), required=True)
    p.add_argument("--degree", type=_positive_int, default=None)
    _optimizer(p)
    _common(p)
    p = esub.add_parser("gpc")
    p.add_argument("--nmax", type=_positive_int, default=5)
    _optimizer(p)
    _common(p)
    return top


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    opts = vars(ns).copy()
    command = opts.pop("command")
    subcommand = opts.pop("subcommand", None)
    if opts.get("threads") is None:
        env = os.environ.get("SPECWEIGHT_THREADS")
        try:
            opts["threads"] = _positive_int(env) if env else 1
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"SPECWEIGHT_THREADS must be a positive integer, got {env!r}") from None
    if "builtin" in opts and opts["builtin"] is not None and opts["builtin"] not in bi.WEIGHTS:
        raise UsageError(f"unknown builtin weight {opts['builtin']!r}; choose from {sorted(bi.WEIGHTS)}")
    for key in ("builtin1", "builtin2"):
        if key in opts and opts[key] not in bi.WEIGHTS:
            raise UsageError(f"unknown builtin weight {opts[key]!r}")
    if "function" in opts and opts["function"] not in bi.FUNCTIONS:
        raise UsageError(f"unknown builtin function {opts['function']!r}; choose from {sorted(bi.FUNCTIONS)}")
    return RunConfig(command, subcommand, opts)


# ---------------------------------------------------------------- output


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _emit(result, out):
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in result.tables().items():
        write_csv(d / name, header, rows)
    write_json(d / "summary.json", result.summary())


# ---------------------------------------------------------------- commands


def _optimizer_config(cfg, default=cubature.OptimizerConfig()):
    kw = dict(seed=cfg.seed, restarts=cfg.restarts, max_iters=cfg.max_iters,
              joint_polish=not cfg.no_polish, threads=cfg.threads)
    if cfg.trials is not None:
        kw["trials"] = cfg.trials
    else:
        kw["trials"] = default.trials
    return cubature.OptimizerConfig(**{**default.__dict__, **kw})


def _cmd_basis(cfg):
    if cfg.builtin:
        entry = bi.weight_entry(cfg.builtin)
        weight, domain = entry.weight, entry.domain
    else:
        weight, domain = load_config(cfg.config)
    b = gram_schmidt(weight, domain, cfg.degree, cfg.oracle_tol, cap=cfg.cap)
    b.save(cfg.out)
    print(f"{len(b)} functions, gram residual {b.gram_residual:.3g}")


def _cmd_project(cfg):
    b = OrthonormalBasis.load(cfg.basis)
    f = bi.function_entry(cfg.function)
    e = project(f, b, cfg.oracle_tol, structure=f.structure)
    ns = list(range(b.degree + 1))
    obj = {"function": cfg.function, "coeffs": [float(c) for c in e.coeffs],
           "tail_norms": [float(t) for t in tail_norms(e, ns)]}
    try:
        rep = decay_report(e)
        obj["fit"] = {"slope": rep.slope, "intercept": rep.intercept,
                      "fit_indices": [k + 1 for k in rep.envelope_points[-4:]]}
    except NumericalError as exc:
        obj["fit"] = {"error": str(exc)}
    write_json(cfg.out, obj)


def _cmd_compare(cfg):
    e1, e2 = bi.weight_entry(cfg.builtin1), bi.weight_entry(cfg.builtin2)
    f = bi.function_entry(cfg.function)
    b1 = gram_schmidt(e1.weight, e1.domain, cfg.degree, cfg.oracle_tol)
    b2 = gram_schmidt(e2.weight, e2.domain, cfg.degree, cfg.oracle_tol)
    C, rows = comparison_check(f, b1, b2, cfg.C, tol=cfg.oracle_tol, structure=f.structure,
                               slack=experiments.COMPARISON_SLACK)
    write_csv(cfg.out, ("n", "tail_w2", "C_tail_w1", "pass"), [(r.n, r.tail2, r.bound, r.passed) for r in rows])
    print(f"C = {C:.17g}; {'all pass' if all(r.passed for r in rows) else 'FAILURES'}")


def _cmd_cubature(cfg):
    if cfg.subcommand == "build":
        b = OrthonormalBasis.load(cfg.basis)
        r = cubature.build_rule(b, _optimizer_config(cfg), cfg.size,
                                {"path": cfg.basis, "dimension": b.dimension, "degree": b.degree})
        r.save(cfg.out)
        print(f"{len(r)} points, lambda {r.lam:.6g}, exactness residual {r.exactness_residual:.3g}")
    elif cfg.subcommand == "apply":
        r = cubature.CubatureRule.load(cfg.rule)
        v = cubature.apply_rule(r, bi.function_entry(cfg.function))
        print(format(v, ".17g"))
        if cfg.out:
            write_json(cfg.out, {"function": cfg.function, "value": v, "points": len(r)})
    else:
        b = OrthonormalBasis.load(cfg.basis)
        r = cubature.CubatureRule.load(cfg.rule, b)
        f = bi.function_entry(cfg.function)
        e = project(f, b, cfg.oracle_tol, structure=f.structure)
        rows = cubature.verify_theta(r, f, e, cfg.theta)
        write_csv(cfg.out, ("j", "residual", "bound", "pass"), [(t.j, t.residual, t.bound, t.passed) for t in rows])
        print(f"{sum(t.passed for t in rows)}/{len(rows)} points pass")


def _cmd_exp(cfg):
    tol = cfg.oracle_tol
    sc = cfg.subcommand
    if sc == "decay":
        res = experiments.run_decay_suite(cfg.example, cfg.degree, tol)
    elif sc == "gfun":
        res = experiments.run_gfun_legendre(cfg.degree, tol)
    elif sc == "lshape":
        res = experiments.run_lshape(cfg.degree, tol, cfg.threads)
    elif sc == "integrate":
        opt = _optimizer_config(cfg, experiments.INTEGRATION_CONFIG)
        res = experiments.run_integration_examples(cfg.example, opt, tol, cfg.degree)
    else:
        res = experiments.run_gpc(cfg.nmax, _optimizer_config(cfg, experiments.GPC_CONFIG), tol)
    _emit(res, cfg.out)
    if sc == "lshape" and cfg.reference:
        _emit_alignment(res, cfg.reference, cfg.out)
    print(json.dumps(_jsonable(res.summary()), sort_keys=True))


def _read_reference(path):
    """``element,method,degree_1..`` rows -> ``{method: array}`` ordered by element."""
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for method in ("modified", "classical"):
        sel = sorted((r for r in rows if r["method"] == method), key=lambda r: int(r["element"]))
        out[method] = np.array([[float(r[k]) for k in r if k.startswith("degree_")] for r in sel])
    return out


def _emit_alignment(res, path, out):
    ref = _read_reference(path)
    ours = np.hstack([res.scaled("modified"), res.scaled("classical")])
    mapping = experiments.align_cells(ours, np.hstack([ref["modified"], ref["classical"]]))
    rows = []
    for i, k in enumerate(mapping):
        for method in ("modified", "classical"):
            mine = res.scaled(method)[k]
            rel = np.abs(mine / ref[method][i] - 1.0)
            rows.append((i + 1, int(k), method, *rel))
    D = len(res.degrees)
    write_csv(Path(out) / "alignment.csv",
              ("reference_element", "cell", "method") + tuple(f"rel_diff_degree_{n}" for n in res.degrees[:D]), rows)


COMMANDS = {"basis": _cmd_basis, "project": _cmd_project, "compare": _cmd_compare,
            "cubature": _cmd_cubature, "exp": _cmd_exp}


def dispatch(cfg: RunConfig) -> int:
    try:
        COMMANDS[cfg.command](cfg)
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
