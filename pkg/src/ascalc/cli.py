"""``ascalc`` command line front end.

Every subcommand can also be driven by a JSON config through
``ascalc run config.json``; the config holds ``"command"`` plus the same
options as the flags (dashes replaced by underscores).  Exit status is 0 on
success, 2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .contour import power_semigroup_apply, semigroup_apply, semigroup_derivative
from .errors import AscalcError, ConfigError, IllConditionedEigenbasis, NumericalError
from .evolution import (ProblemSpec, parse_phi, reference_ode_solve, solve_direct,
                        write_trajectory_csv)
from .gallery import affine_family, parse_operator
from .inverse import (ObservationFunctional, read_observations_csv, recover_phi,
                      recovery_error_report, synthesize_observations, write_observations_csv,
                      write_recovery_csv)
from .operators import eig_oracle, estimate_sector, oracle_function_apply

COMMANDS = ("verify-operator", "semigroup", "direct", "inverse", "nonautonomous", "convergence")


def _complex_list(v):
    v = np.asarray(v)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


def parse_vector(text: str, n: int) -> np.ndarray:
    """``unit:i``, ``ones``, ``file:<path.json>`` or comma-separated reals."""
    if text.startswith("unit:"):
        i = int(text[5:])
        if not 0 <= i < n:
            raise ConfigError(f"unit vector index {i} outside dimension {n}")
        e = np.zeros(n)
        e[i] = 1.0
        return e
    if text == "ones":
        return np.ones(n)
    if text.startswith("file:"):
        path = text[5:]
        if not Path(path).exists():
            raise ConfigError(f"vector file {path} does not exist")
        d = json.loads(Path(path).read_text())
        if isinstance(d, dict):
            v = np.asarray(d["re"], float) + 1j * np.asarray(d.get("im", np.zeros(len(d["re"]))), float)
        else:
            v = np.asarray(d, float)
    else:
        try:
            v = np.array([float(p) for p in text.split(",")])
        except ValueError:
            raise ConfigError(f"cannot parse vector {text!r}") from None
    if v.shape != (n,):
        raise ConfigError(f"vector has length {v.size}, operator dimension is {n}")
    return v


def parse_grid(text: str, spacing: str = "uniform") -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise ConfigError(f"grid must be start:stop:count, got {text!r}") from None
    if not 0 < start < stop or count < 1:
        raise ConfigError("grid needs 0 < start < stop and count >= 1")
    if spacing == "uniform":
        return np.linspace(start, stop, count)
    if spacing == "log":
        return np.geomspace(start, stop, count)
    raise ConfigError(f"unknown grid spacing {spacing!r}")


def parse_observation(text: str, n: int) -> ObservationFunctional:
    """``coordinate:q``, ``sum`` or ``weights:<comma list | file:path>``."""
    if text.startswith("coordinate:"):
        ell = ObservationFunctional.coordinate(int(text.split(":", 1)[1]))
    elif text == "sum":
        ell = ObservationFunctional.weighted(np.ones(n))
    elif text.startswith("weights:"):
        ell = ObservationFunctional.weighted(parse_vector(text[8:], n))
    else:
        raise ConfigError(f"unknown observation functional {text!r}")
    ell.check_dimension(n)
    return ell


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ASCALC_THREADS")
    return int(env) if env else None


def _config_hash(args) -> str:
    blob = json.dumps({k: v for k, v in sorted(vars(args).items()) if k != "func"},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _write_meta(path, args):
    meta = {"command": args.command, "config_hash": _config_hash(args), "version": __version__,
            "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"}}
    Path(f"{path}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _emit(obj, args):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        _write_meta(args.out, args)
    else:
        sys.stdout.write(text)


def cmd_verify_operator(args):
    A = parse_operator(args.operator)
    prof = estimate_sector(A)
    try:
        cond = eig_oracle(A).cond
        mode = "oracle"
    except IllConditionedEigenbasis as exc:
        cond, mode = exc.cond, "contour-only"
    _emit({"label": A.label, "n": A.n, "eigenvalues": _complex_list(A.eigenvalues),
           "profile": prof.to_json(), "eigenbasis_cond": float(cond), "mode": mode}, args)


def cmd_semigroup(args):
    A = parse_operator(args.operator)
    x = parse_vector(args.x, A.n)
    kw = dict(theta=args.theta, nodes=args.nodes, threads=_threads(args), full_output=True)
    if args.derivative:
        y, info = semigroup_derivative(A, None, args.alpha, args.t, x, args.derivative, args.tol, **kw)
    elif args.beta:
        y, info = power_semigroup_apply(A, None, args.alpha, args.beta, args.t, x, args.tol, **kw)
    else:
        y, info = semigroup_apply(A, None, args.alpha, args.t, x, args.tol, **kw)
    est = info["est_error"]
    _emit({"t": args.t, "result_re": np.real(y).tolist(), "result_im": np.imag(y).tolist(),
           "nodes_used": int(info["nodes_used"]),
           "est_error": None if est is None or np.isnan(est) else float(est)}, args)


def _problem(args, A=None, family=None):
    if A is None:
        A = parse_operator(args.operator)
    grid = parse_grid(args.grid, args.spacing)
    phi = parse_phi(args.phi, T=float(grid[-1]))
    u0 = parse_vector(args.u0, A.n)
    if family is not None:
        return ProblemSpec(None, 1.0, phi, u0, grid, args.sign, family=family, tau=args.tau)
    return ProblemSpec(A, args.alpha, phi, u0, grid, args.sign)


def _run_direct(args, spec):
    traj = solve_direct(spec, args.tol, threads=_threads(args))
    summary = {"points": len(traj), "spec": traj.meta["spec"], "solver": traj.meta["solver"]}
    if args.reference:
        ref = reference_ode_solve(spec, args.step)
        rel = np.linalg.norm(traj.states - ref.states, axis=1) / np.linalg.norm(ref.states, axis=1)
        summary["max_rel_vs_rk4"] = float(np.max(rel))
    if args.out:
        write_trajectory_csv(traj, args.out, include_t0=spec.u0 if args.include_t0 else None)
        _write_meta(args.out, args)
    if args.obs_out:
        ell = parse_observation(args.observe, spec.operator.n)
        write_observations_csv(synthesize_observations(spec, ell, args.tol, threads=_threads(args)),
                               args.obs_out)
        _write_meta(args.obs_out, args)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_direct(args):
    _run_direct(args, _problem(args))


def cmd_nonautonomous(args):
    A0 = parse_operator(args.operator)
    B = parse_operator(args.B).entries if args.B.startswith(("gallery:", "file:")) else \
        np.eye(A0.n) * float(args.B)
    fam = affine_family(A0, B)
    _run_direct(args, _problem(args, A0, family=fam))


def cmd_inverse(args):
    if args.obs:
        if not Path(args.obs).exists():
            raise ConfigError(f"observation file {args.obs} does not exist")
        series = read_observations_csv(args.obs)
    else:
        if not (args.operator and args.phi):
            raise ConfigError("inverse needs --obs or (--operator and --phi) to synthesize")
        spec = _problem(args)
        series = synthesize_observations(spec, parse_observation(args.observe, spec.operator.n),
                                         args.tol, threads=_threads(args))
        if args.obs_out:
            write_observations_csv(series, args.obs_out)
            _write_meta(args.obs_out, args)
    res = recover_phi(series, args.method, args.sign, args.floor, args.window)
    summary = {"points": int(res.times.size), "phi_min": float(res.phi_hat.min()),
               "phi_max": float(res.phi_hat.max()), "diagnostics": res.diagnostics}
    if args.true_phi:
        rep = recovery_error_report(res, parse_phi(args.true_phi, T=float(series.times[-1])))
        summary["max_rel"], summary["l2_rel"] = rep["max_rel"], rep["l2_rel"]
    if args.out:
        write_recovery_csv(res, args.out)
        _write_meta(args.out, args)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_convergence(args):
    A = parse_operator(args.operator)
    x = parse_vector(args.x, A.n)
    try:
        nodes = [int(v) for v in args.nodes.split(",")]
    except ValueError:
        raise ConfigError(f"--nodes must be a comma list of integers, got {args.nodes!r}") from None
    beta, alpha, t = args.beta, args.alpha, args.t
    ref = oracle_function_apply(eig_oracle(A), lambda z: z**beta * np.exp(-t * z**alpha), x)
    rows = []
    for N in nodes:
        if beta:
            y = power_semigroup_apply(A, None, alpha, beta, t, x, args.tol, nodes=N, theta=args.theta)
        else:
            y = semigroup_apply(A, None, alpha, t, x, args.tol, nodes=N, theta=args.theta)
        rows.append({"nodes": N, "error": float(np.linalg.norm(y - ref) / np.linalg.norm(ref))})
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("nodes,error\n")
            for r in rows:
                fh.write(f"{r['nodes']},{r['error']:.17g}\n")
        _write_meta(args.out, args)
    else:
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ascalc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, operator_required=True):
        sp.add_argument("--operator", required=operator_required,
                        help="gallery:<name>(<params>) or file:<path.json>")
        sp.add_argument("--tol", type=float, default=1e-10, help="contour tolerance relative to ||x||")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: ASCALC_THREADS)")
        sp.add_argument("--out", default=None, help="output path (stdout if omitted)")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")

    def problem(sp, alpha=True):
        if alpha:
            sp.add_argument("--alpha", type=_positive(float), default=1.0)
        sp.add_argument("--phi", default=None, help="const(c), affine(a,b), sine(a,b[,w]) or csv:<path>")
        sp.add_argument("--grid", default="0.1:1:50", help="start:stop:count")
        sp.add_argument("--spacing", choices=("uniform", "log"), default="uniform")
        sp.add_argument("--u0", default="ones", help="unit:i, ones, file:<path> or comma list")
        sp.add_argument("--sign", choices=("consistent", "paper"), default="consistent")
        sp.add_argument("--observe", default="coordinate:0", help="coordinate:q, sum or weights:<...>")
        sp.add_argument("--obs-out", default=None, help="also write the observation CSV here")

    def direct_flags(sp):
        sp.add_argument("--include-t0", action="store_true", help="prepend u0 at t=0")
        sp.add_argument("--reference", action="store_true", help="compare against the RK4 oracle")
        sp.add_argument("--step", type=_positive(float), default=1e-3, help="RK4 step")

    sp = sub.add_parser("verify-operator", help="spectrum, sector profile and oracle availability")
    common(sp)
    sp.set_defaults(func=cmd_verify_operator)

    sp = sub.add_parser("semigroup", help="evaluate T_alpha(t) x (or A^beta T_alpha(t) x)")
    common(sp)
    sp.add_argument("--alpha", type=_positive(float), default=1.0)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--x", default="unit:0", help="unit:i, ones, file:<path> or comma list")
    sp.add_argument("--beta", type=float, default=0.0, help="apply A^beta as well (beta > 0)")
    sp.add_argument("--derivative", type=int, default=0, help="k-th time derivative instead")
    sp.add_argument("--theta", type=float, default=None, help="override contour angle")
    sp.add_argument("--nodes", type=int, default=None, help="fixed nodes per branch (no doubling check)")
    sp.set_defaults(func=cmd_semigroup)

    sp = sub.add_parser("direct", help="solve u' = -phi(t) A^alpha u on a grid")
    common(sp)
    problem(sp)
    direct_flags(sp)
    sp.set_defaults(func=cmd_direct)

    sp = sub.add_parser("nonautonomous", help="frozen-tau problem with A(tau) = A0 + tau B")
    common(sp)
    problem(sp, alpha=False)
    direct_flags(sp)
    sp.add_argument("--B", default="1", help="operator reference or a scalar c meaning c*I")
    sp.add_argument("--tau", type=float, default=0.0)
    sp.set_defaults(func=cmd_nonautonomous)

    sp = sub.add_parser("inverse", help="recover phi from observations")
    common(sp, operator_required=False)
    problem(sp)
    sp.add_argument("--obs", default=None, help="observation CSV t,h1_re,h1_im,h2_re,h2_im")
    sp.add_argument("--method", choices=("central", "one_sided_ends", "smoothed"), default="central")
    sp.add_argument("--floor", type=float, default=1e-8)
    sp.add_argument("--window", type=int, default=9)
    sp.add_argument("--true-phi", default=None, help="report errors against this coefficient")
    sp.set_defaults(func=cmd_inverse)

    sp = sub.add_parser("convergence", help="oracle error versus fixed node count")
    common(sp)
    sp.add_argument("--alpha", type=_positive(float), default=1.0)
    sp.add_argument("--t", type=_positive(float), default=1.0)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--x", default="ones")
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--nodes", default="8,16,32,64")
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("run", help="run a JSON config")
    sp.add_argument("config")
    return p


def _config_argv(path) -> list[str]:
    if not Path(path).exists():
        raise ConfigError(f"config {path} does not exist")
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    cmd = cfg.pop("command", None)
    if cmd not in COMMANDS:
        raise ConfigError(f"config command must be one of {COMMANDS}, got {cmd!r}")
    argv = [cmd]
    for key, val in cfg.items():
        flag = "--" + key.replace("_", "-")
        if key == "B":
            flag = "--B"
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif isinstance(val, list):
            argv += [flag, ",".join(str(v) for v in val)]
        else:
            argv += [flag, str(val)]
    return argv


def _validate(args):
    for name in ("obs",):
        path = getattr(args, name, None)
        if path and not Path(path).exists():
            raise ConfigError(f"--{name} file {path} does not exist")
    tol = getattr(args, "tol", None)
    if tol is not None and not 1e-14 < tol < 1e-2:
        raise ConfigError(f"--tol {tol} outside (1e-14, 1e-2)")
    if getattr(args, "command", None) in ("direct", "nonautonomous") and not args.phi:
        raise ConfigError("--phi is required")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            args = parser.parse_args(_config_argv(args.config))
        _validate(args)
        args.func(args)
    except ConfigError as exc:
        print(f"ascalc: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ascalc: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except AscalcError as exc:
        print(f"ascalc: config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
