"""Command-line interface: ``compoisson <command> [options]``.

Every command writes one JSON document (or CSV with ``--format csv``) to
standard output. Exit codes: 0 success, 1 a verification check failed,
2 usage or parameter error, 3 numeric error. Errors are reported as a JSON
object with a top-level ``"error"`` field naming the exception class.

Laws consumed by commands such as ``fisher`` or ``dpcp recover`` are given
either as ``--pmf-file PATH`` (the pmf JSON written by ``pmf``) or as an
inline ``--pmf FAMILY:key=value,...`` spec, for example ``cmp:lambda=1,nu=2``,
``poisson:mu=2``, ``geometric:p=0.5`` or ``zeta:sigma=3``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import math
import sys
from typing import Callable, Optional

import numpy as np

from . import __version__
from .characterizations import (
    closure_test,
    conditional_given_sum,
    convolve,
    limit_cmb_to_cmp,
    limit_cmnb_to_cmp,
    rao_rubin_gap,
    stein_residual,
)
from .dpcp import DpcpParams, dcp_sample, dpcp_reconstruct, dpcp_recover, pgf_min_modulus
from .errors import CmpError, ParameterError
from .information import com_fisher_info, renyi_entropy, score_and_fisher, stam_gap, tsallis_entropy
from .kernels import (
    CmbParams,
    CmnbParams,
    CmpParams,
    EcompParams,
    cmb_pmf,
    cmnb_pmf,
    cmp_moments,
    cmp_pmf,
    ecomp_pmf,
    geometric_pmf,
    hyper_poisson_series,
    lerch_series,
    log_normalizer_asymptotic,
    log_normalizer_series,
    poisson_pmf,
    power_series_pmf,
    sample,
    zeta_series,
)
from .pmf import DEFAULT_TOL, TruncatedPmf, point_mass
from .queue import QueueConfig, queue_exact_steady_state, queue_simulate
from .transform import com_type
from .verify import CHECKS, run_checks

# finest tolerance the kernels are asked for when an input must be tightened
_TOL_FLOOR = 1e-300


class _UsageError(Exception):
    """Bad command-line input detected after argparse accepted it."""


# ---------------------------------------------------------------------------
# inline law specs
# ---------------------------------------------------------------------------


def _spec_builders() -> dict[str, tuple[tuple[str, ...], Callable[..., TruncatedPmf]]]:
    # family -> (required keys, builder(values, tol))
    return {
        "cmp": (("lambda", "nu"), lambda v, tol: cmp_pmf(CmpParams(v["lambda"], v["nu"]), tol=tol)),
        "poisson": (("mu",), lambda v, tol: poisson_pmf(v["mu"], tol=tol)),
        "geometric": (("p",), lambda v, tol: geometric_pmf(v["p"], tol=tol)),
        "cmb": (("m", "p", "nu"), lambda v, tol: cmb_pmf(CmbParams(_as_int(v["m"], "m"), v["p"], v["nu"]))),
        "cmnb": (("r", "p", "nu"), lambda v, tol: cmnb_pmf(CmnbParams(v["r"], v["nu"], v["p"]), tol)),
        "ecomp": (
            ("r", "theta", "alpha", "beta"),
            lambda v, tol: ecomp_pmf(EcompParams(v["r"], v["theta"], v["alpha"], v["beta"]), tol),
        ),
        "zeta": (("sigma",), lambda v, tol: power_series_pmf(zeta_series(v["sigma"]), tol)),
        "lerch": (
            ("rho", "c"),
            lambda v, tol: power_series_pmf(lerch_series(v["rho"], v["c"], v.get("nu", 1.0)), tol),
        ),
        "hyper-poisson": (
            ("a", "lambda"),
            lambda v, tol: power_series_pmf(hyper_poisson_series(v["a"], v["lambda"], v.get("nu", 1.0)), tol),
        ),
        "point": (("k",), lambda v, tol: point_mass(_as_int(v["k"], "k"))),
    }


def _as_int(value: float, name: str) -> int:
    if int(value) != value:
        raise ParameterError(f"{name} must be an integer (got {value})")
    return int(value)


def parse_law(spec: str, tol: float = DEFAULT_TOL) -> TruncatedPmf:
    """Build a pmf from ``family:key=value,...``; an optional ``shift=k`` moves it right."""
    family, _, body = spec.partition(":")
    builders = _spec_builders()
    if family not in builders:
        raise _UsageError(f"unknown family {family!r} in {spec!r}; choose from {sorted(builders)}")
    values: dict[str, float] = {}
    for item in filter(None, body.split(",")):
        key, eq, raw = item.partition("=")
        if not eq:
            raise _UsageError(f"expected key=value, got {item!r} in {spec!r}")
        try:
            values[key.strip()] = float(raw)
        except ValueError as exc:
            raise _UsageError(f"{key.strip()} must be a number (got {raw!r})") from exc
    required, build = builders[family]
    missing = [k for k in required if k not in values]
    if missing:
        raise _UsageError(f"{family} needs {', '.join(missing)}")
    shift = _as_int(values.pop("shift", 0.0), "shift")
    law = build(values, tol)
    return law.shift(shift) if shift else law


def _read_law(spec: Optional[str], path: Optional[str], tol: float, what: str = "pmf") -> TruncatedPmf:
    if (spec is None) == (path is None):
        raise _UsageError(f"give exactly one of --{what} and --{what}-file")
    if spec is not None:
        return parse_law(spec, tol)
    try:
        with open(path, encoding="utf-8") as fh:
            return TruncatedPmf.from_json(fh.read())
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path} is not valid JSON: {exc}") from exc


def _input_tol(tol: float, order: float) -> float:
    """Tolerance for a law that will be raised to the power ``order``.

    A tail of relative size ``t`` becomes roughly ``t**order``, so orders
    below one need a finer input window to keep the output within ``tol``.
    """
    if order >= 1:
        return tol
    return max(tol ** (1.0 / order), _TOL_FLOOR)


# ---------------------------------------------------------------------------
# command handlers; each returns (document, exit_code)
# ---------------------------------------------------------------------------


def _cmd_pmf(a):
    if a.family == "cmp":
        return cmp_pmf(CmpParams(a.lam, a.nu), k_max=a.kmax, tol=a.tol)
    if a.family == "cmb":
        return cmb_pmf(CmbParams(a.m, a.p, a.nu))
    if a.family == "cmnb":
        return cmnb_pmf(CmnbParams(a.r, a.nu, a.p), a.tol)
    if a.family == "ecomp":
        return ecomp_pmf(EcompParams(a.r, a.theta, a.alpha, a.beta), a.tol)
    if a.series == "zeta":
        spec = zeta_series(_need(a.sigma, "--sigma"))
    elif a.series == "lerch":
        spec = lerch_series(_need(a.rho, "--rho"), _need(a.c, "--c"), a.nu)
    else:
        spec = hyper_poisson_series(_need(a.a, "--a"), _need(a.lam, "--lambda"), a.nu)
    return power_series_pmf(spec, a.tol)


def _need(value, flag: str):
    if value is None:
        raise _UsageError(f"{flag} is required for this series")
    return value


def _cmd_normalizer(a):
    params = CmpParams(a.lam, a.nu)
    if a.method == "asymptotic":
        log_value = log_normalizer_asymptotic(params)
        return {"method": "asymptotic", "lambda": a.lam, "nu": a.nu,
                "value": _safe_exp(log_value), "log_value": log_value}
    res = log_normalizer_series(params, a.tol)
    return {"method": "series", "lambda": a.lam, "nu": a.nu, "value": _safe_exp(res.log_value),
            "log_value": res.log_value, "tail_bound": res.tail_bound, "terms_used": res.terms_used}


def _safe_exp(x: float) -> Optional[float]:
    return math.exp(x) if x < 709.0 else None


def _cmd_transform(a):
    law = _read_law(a.pmf, a.pmf_file, _input_tol(a.tol, a.nu))
    res = com_type(law, a.nu, a.tol)
    doc = res.pmf.to_dict()
    doc["log_norm_const"] = res.log_norm_const
    doc["nu"] = a.nu
    return doc


def _cmd_entropy(a):
    law = _read_law(a.pmf, a.pmf_file, _input_tol(a.tol, a.alpha))
    fn = renyi_entropy if a.kind == "renyi" else tsallis_entropy
    return {"kind": a.kind, "alpha": a.alpha, "entropy": fn(law, a.alpha, a.tol),
            "family": law.meta.get("family")}


def _cmd_fisher(a):
    law = _read_law(a.pmf, a.pmf_file, _input_tol(a.tol, 1.0 / a.nu))
    report = score_and_fisher(law) if a.nu == 1 else com_fisher_info(law, a.nu, a.tol)
    doc = report.to_dict()
    doc["score"] = [float(s) for s in report.score]
    doc["support_start"] = report.support_start
    return doc


def _two_laws(a, nu: float = 1.0):
    tol = _input_tol(a.tol, 1.0 / nu)
    return _read_law(a.x, a.x_file, tol, "x"), _read_law(a.y, a.y_file, tol, "y")


def _cmd_stam(a):
    x, y = _two_laws(a, a.nu)
    gap = stam_gap(x, y, a.nu, a.tol)
    return {"nu": a.nu, "gap": gap.gap, "lhs": gap.lhs, "rhs": gap.rhs}


def _cmd_convolve(a):
    x, y = _two_laws(a)
    return convolve(x, y)


def _cmd_conditional(a):
    x, y = _two_laws(a)
    probs = conditional_given_sum(x, y, a.s)
    return TruncatedPmf(0, probs, 0.0, meta={"family": "conditional", "params": {"s": a.s}})


def _cmd_closure(a):
    return closure_test(a.lambda1, a.lambda2, a.nu, a.nmax, a.tol)


def _cmd_stein(a):
    law = _read_law(a.pmf, a.pmf_file, a.tol)
    res = stein_residual(law, a.lam, a.nu)
    return {"lambda": a.lam, "nu": a.nu, "max_residual": res.max_residual, "argmax_j": res.argmax_j}


def _cmd_rao_rubin(a):
    law = _read_law(a.pmf, a.pmf_file, a.tol)
    return {"p": a.p, "nu": a.nu, "max_gap": rao_rubin_gap(law, a.p, a.nu)}


def _cmd_limit(a):
    fn = limit_cmb_to_cmp if a.family == "cmb" else limit_cmnb_to_cmp
    curve = fn(a.lam, a.nu, a.grid, a.tol)
    doc = curve.to_dict()
    doc["strictly_decreasing"] = curve.strictly_decreasing()
    return doc


def _read_params(path: str) -> DpcpParams:
    try:
        with open(path, encoding="utf-8") as fh:
            return DpcpParams.from_dict(json.load(fh))
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path} is not valid JSON: {exc}") from exc


def _cmd_dpcp(a):
    if a.action == "recover":
        return dpcp_recover(_read_law(a.pmf, a.pmf_file, a.tol), a.terms).to_dict()
    if a.action == "reconstruct":
        return dpcp_reconstruct(_read_params(a.params_file), a.nmax)
    if a.action == "sample":
        draws = dcp_sample(_read_params(a.params_file), a.n, a.seed)
        return {"seed": a.seed, "n": a.n, "samples": [int(d) for d in draws]}
    res = pgf_min_modulus(_read_law(a.pmf, a.pmf_file, a.tol), a.radial_steps, a.angular_steps)
    return {"min_modulus": res.min_mod, "argmin_z": [res.argmin_z.real, res.argmin_z.imag]}


def _cmd_queue(a):
    if a.action == "exact":
        return queue_exact_steady_state(a.arrival, a.service, a.nu, a.tol)
    config = QueueConfig(a.arrival, a.service, a.nu, a.horizon, a.burn_in, a.seed, a.state_cap)
    return queue_simulate(config).to_dict()


def _cmd_verify(a):
    report = run_checks(None if a.check == "all" else [a.check], seed=a.seed)
    return report, 0 if report.overall else 1


def _cmd_sample(a):
    law = _read_law(a.pmf, a.pmf_file, a.tol)
    draws = sample(law, a.n, a.seed)
    return {"seed": a.seed, "n": a.n, "samples": [int(d) for d in draws]}


def _cmd_moments(a):
    if a.pmf is None and a.pmf_file is None and a.lam is not None:
        m = cmp_moments(CmpParams(a.lam, _need(a.nu, "--nu")), a.tol)
        return {"mean": m.mean, "variance": m.variance, "mean_approx": m.mean_approx}
    law = _read_law(a.pmf, a.pmf_file, a.tol)
    return {"mean": law.mean(), "variance": law.variance(), "family": law.meta.get("family")}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"must be a positive number (got {text})")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers (got {text!r})") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL,
                   help="truncation tolerance (default 1e-12)")
    p.add_argument("--seed", type=int, default=0)
    return p


def _law_args(p: argparse.ArgumentParser, name: str = "pmf", required: bool = True):
    p.add_argument(f"--{name}", metavar="SPEC", help="inline law, e.g. cmp:lambda=1,nu=2")
    p.add_argument(f"--{name}-file", metavar="PATH", help="pmf JSON document")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="compoisson", allow_abbrev=False,
                                     description="COM-Poisson family toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(parent, name, handler, **kw):
        p = parent.add_parser(name, parents=[common], allow_abbrev=False, **kw)
        p.set_defaults(handler=handler)
        return p

    # pmf
    pmf = sub.add_parser("pmf", help="tabulate a family member").add_subparsers(dest="family", required=True)
    p = command(pmf, "cmp", _cmd_pmf)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--kmax", type=int)
    p = command(pmf, "cmb", _cmd_pmf)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p = command(pmf, "cmnb", _cmd_pmf)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p = command(pmf, "ecomp", _cmd_pmf)
    for flag in ("--r", "--theta", "--alpha", "--beta"):
        p.add_argument(flag, type=float, required=True)
    p = command(pmf, "series", _cmd_pmf)
    p.add_argument("--series", choices=("zeta", "lerch", "hyper-poisson"), required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--nu", type=float, default=1.0)

    # normalizer
    norm = sub.add_parser("normalizer", help="CMP normalizing constant").add_subparsers(dest="method", required=True)
    for method in ("series", "asymptotic"):
        p = command(norm, method, _cmd_normalizer)
        p.add_argument("--lambda", dest="lam", type=float, required=True)
        p.add_argument("--nu", type=float, required=True)

    # transform
    tr = sub.add_parser("transform", help="COM-type transforms").add_subparsers(dest="kind", required=True)
    p = command(tr, "com-type", _cmd_transform)
    _law_args(p)
    p.add_argument("--nu", type=_positive_float, required=True)

    # entropy
    ent = sub.add_parser("entropy", help="Renyi and Tsallis entropies").add_subparsers(dest="kind", required=True)
    for kind in ("renyi", "tsallis"):
        p = command(ent, kind, _cmd_entropy)
        _law_args(p)
        p.add_argument("--alpha", type=_positive_float, required=True)

    p = command(sub, "fisher", _cmd_fisher, help="score and (COM-type) Fisher information")
    _law_args(p)
    p.add_argument("--nu", type=_positive_float, default=1.0)

    p = command(sub, "stam", _cmd_stam, help="reciprocal Fisher information gap")
    _law_args(p, "x")
    _law_args(p, "y")
    p.add_argument("--nu", type=_positive_float, default=1.0)

    p = command(sub, "convolve", _cmd_convolve, help="law of X + Y")
    _law_args(p, "x")
    _law_args(p, "y")

    p = command(sub, "conditional", _cmd_conditional, help="law of X given X + Y = s")
    _law_args(p, "x")
    _law_args(p, "y")
    p.add_argument("--s", type=int, required=True)

    p = command(sub, "closure", _cmd_closure, help="does CMP + CMP stay CMP")
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--nmax", type=int, default=20)

    p = command(sub, "stein", _cmd_stein, help="Stein identity residual")
    _law_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)

    p = command(sub, "rao-rubin", _cmd_rao_rubin, help="damage-model invariance gap")
    _law_args(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)

    lim = sub.add_parser("limit", help="TV curves to the CMP limit").add_subparsers(dest="family", required=True)
    for family in ("cmb", "cmnb"):
        p = command(lim, family, _cmd_limit)
        p.add_argument("--lambda", dest="lam", type=float, required=True)
        p.add_argument("--nu", type=float, required=True)
        p.add_argument("--grid", type=_float_list, required=True, help="comma-separated m or r values")

    dp = sub.add_parser("dpcp", help="compound Poisson representation").add_subparsers(dest="action", required=True)
    p = command(dp, "recover", _cmd_dpcp)
    _law_args(p)
    p.add_argument("--terms", type=int, default=50)
    p = command(dp, "reconstruct", _cmd_dpcp)
    p.add_argument("--params-file", required=True, metavar="PATH")
    p.add_argument("--nmax", type=int, required=True)
    p = command(dp, "sample", _cmd_dpcp)
    p.add_argument("--params-file", required=True, metavar="PATH")
    p.add_argument("--n", type=int, required=True)
    p = command(dp, "zeros", _cmd_dpcp)
    _law_args(p)
    p.add_argument("--radial-steps", type=int, default=256)
    p.add_argument("--angular-steps", type=int, default=256)

    qu = sub.add_parser("queue", help="state-dependent service queue").add_subparsers(dest="action", required=True)
    for action in ("exact", "simulate"):
        p = command(qu, action, _cmd_queue)
        p.add_argument("--arrival", type=float, required=True)
        p.add_argument("--service", type=float, required=True)
        p.add_argument("--nu", type=float, required=True)
        if action == "simulate":
            p.add_argument("--horizon", type=float, required=True)
            p.add_argument("--burn-in", type=float)
            p.add_argument("--state-cap", type=int)

    p = command(sub, "verify", _cmd_verify, help="run the characterization checks")
    p.add_argument("check", choices=["all", *CHECKS])

    p = command(sub, "sample", _cmd_sample, help="seeded draws by inversion")
    _law_args(p)
    p.add_argument("--n", type=int, required=True)

    p = command(sub, "moments", _cmd_moments, help="mean and variance")
    _law_args(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--nu", type=float)
    return parser


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _plain(obj):
    """JSON-safe copy: numpy scalars/arrays unwrapped, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _render(result, fmt: str) -> str:
    if fmt == "csv" and isinstance(result, TruncatedPmf):
        return result.to_csv()
    doc = result.to_dict() if hasattr(result, "to_dict") else result
    doc = _plain(doc)
    if fmt == "json":
        return json.dumps(doc, allow_nan=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(doc.get("checks"), list):
        writer.writerow(["check", "pass", "statistic", "tolerance"])
        for c in doc["checks"]:
            writer.writerow([c["check"], c["pass"], repr(c["statistic"]), repr(c["tolerance"])])
        return buf.getvalue()
    writer.writerow(["key", "value"])
    for key, value in doc.items():
        writer.writerow([key, value if isinstance(value, (str, int, float, bool)) else json.dumps(value)])
    return buf.getvalue()


def _error(exc: Exception, code: int, out) -> int:
    name = "UsageError" if isinstance(exc, _UsageError) else type(exc).__name__
    out.write(json.dumps({"error": name, "message": str(exc)}) + "\n")
    print(f"compoisson: {name}: {exc}", file=sys.stderr)
    return code


def main(argv: Optional[list[str]] = None, out=None) -> int:
    """Run one command; returns the process exit code."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    try:
        result = args.handler(args)
        code = 0
        if isinstance(result, tuple):
            result, code = result
        text = _render(result, args.format)
    except (_UsageError, ParameterError) as exc:
        return _error(exc, 2, out)
    except CmpError as exc:
        return _error(exc, 3, out)
    try:
        out.write(text)
        out.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the interpreter's final flush
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


if __name__ == "__main__":
    sys.exit(main())
