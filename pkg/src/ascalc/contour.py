"""Quadrature of the sector boundary and the semigroups it defines.

The path is ``Gamma_theta = {rho e^{-i theta}} u {rho e^{i theta}}``, run so
that the sector ``|arg z| < theta`` lies to its left: in along the upper ray,
out along the lower one.  With ``rho = e^s`` and ``dz = z ds`` the integral

    (1 / 2 pi i) int_Gamma f(z) (z - A)^{-1} x dz

becomes two integrals over the real line, discretised by the trapezoid rule
on a uniform ``s`` grid.  The integrand is analytic in a strip around the
real axis whose half-width is the angular room between the path and either
the spectrum or the loss of decay of ``f``, so the rule converges
geometrically in the number of nodes.  Every evaluation is accepted only
after doubling the node count changes the result by less than the
tolerance.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, InadmissibleAlpha, QuadratureNotConverged, SingularResolvent
from .operators import OperatorHandle, SectorProfile, _as_operator, estimate_sector

__all__ = [
    "ContourSpec",
    "QuadratureRule",
    "admissible_theta",
    "build_contour",
    "phi_calculus_apply",
    "semigroup_apply",
    "semigroup_matrix",
    "power_semigroup_apply",
    "semigroup_derivative",
    "tau_semigroup_apply",
    "GrowthFit",
    "growth_fit",
    "continuity_probe",
]

_EPS = np.finfo(float).eps
# upper bound on complex entries held by one batched solve
_CHUNK_ENTRIES = 2_000_000
# truncation tails are cut well below tol; results can be far smaller than ||x||
_TAIL_MARGIN = 1e-1


@dataclass(frozen=True)
class ContourSpec:
    theta: float
    s_min: float
    s_max: float
    N: int
    alpha: float
    t_min: float

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ConfigError("contour needs s_min < s_max")
        if self.N < 4:
            raise ConfigError("contour needs at least 4 nodes per branch")
        if not 0 < self.theta < np.pi:
            raise ConfigError(f"theta={self.theta} outside (0, pi)")

    @property
    def step(self) -> float:
        return (self.s_max - self.s_min) / self.N


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Trapezoid nodes on both rays with the ``dz/ds / (2 pi i)`` factor folded in.

    Nodes are ordered upper branch first, then lower; for a conjugate
    symmetric path the lower nodes are the exact conjugates of the upper.
    """

    nodes: np.ndarray
    weights: np.ndarray
    spec: ContourSpec
    tol: float = 1e-8

    @classmethod
    def from_spec(cls, spec: ContourSpec, tol: float = 1e-8, midpoints: bool = False):
        h = spec.step
        if midpoints:
            s = spec.s_min + h * (np.arange(spec.N) + 0.5)
            w = np.full(spec.N, h)
        else:
            s = spec.s_min + h * np.arange(spec.N + 1)
            w = np.full(spec.N + 1, h)
            w[0] = w[-1] = 0.5 * h
        upper = np.exp(s + 1j * spec.theta)
        lower = upper.conj()
        nodes = np.concatenate([upper, lower])
        # inward on the upper ray, outward on the lower one
        weights = np.concatenate([-w * upper, w * lower]) / (2j * np.pi)
        return cls(nodes=nodes, weights=weights, spec=spec, tol=tol)

    def refined(self) -> "QuadratureRule":
        return QuadratureRule.from_spec(replace(self.spec, N=2 * self.spec.N), self.tol)

    def __len__(self):
        return self.nodes.size


def admissible_theta(omega: float, alpha: float) -> tuple[float, float]:
    """Open interval of path angles with ``theta > omega`` and ``alpha*theta < pi/2``."""
    if alpha <= 0:
        raise InadmissibleAlpha(f"alpha={alpha} must be positive")
    upper = min(np.pi / (2 * alpha), np.pi)
    if omega > 0 and alpha >= np.pi / (2 * omega) or upper <= omega:
        raise InadmissibleAlpha(
            f"alpha={alpha} >= pi/(2 omega)={np.pi / (2 * omega) if omega else np.inf:.6g}"
        )
    return omega, upper


def _strip_halfwidth(omega, alpha, theta):
    return min(theta - omega, np.pi / (2 * alpha) - theta, np.pi - theta)


def build_contour(profile: SectorProfile, alpha: float, t: float, tol: float = 1e-8, *,
                  A: OperatorHandle | None = None, beta: complex = 0.0,
                  theta: float | None = None, nodes: int | None = None) -> QuadratureRule:
    """Choose angle, truncation window and node count for ``f = z**beta e^{-t z**alpha}``.

    ``theta`` defaults to the midpoint of the admissible interval.  The upper
    cut ``s_max`` is where the envelope ``exp(-t rho**alpha cos(alpha theta))
    * C_mu * rho**(gamma + 1 + Re beta)`` falls to ``tol / 10``; the lower cut uses
    ``rho**(1 + Re beta) sin(theta) ||A^{-1}|| / pi``.  When ``A`` is not supplied the
    resolvent at the origin is taken to be of norm one.
    """
    if not 1e-14 < tol < 1e-2:
        raise ConfigError(f"tol={tol} outside (1e-14, 1e-2)")
    if not t > 0:
        raise ConfigError(f"contour needs t > 0, got {t}")
    lo, hi = admissible_theta(profile.omega, alpha)
    if theta is None:
        theta = 0.5 * (lo + hi)
    elif not lo < theta < hi:
        raise ConfigError(f"theta={theta} outside admissible interval ({lo:.6g}, {hi:.6g})")
    decay = np.cos(alpha * theta)
    rb = float(np.real(beta))
    tail = tol * _TAIL_MARGIN

    if A is not None:
        A = _as_operator(A)
        k0 = 1.0 / np.linalg.svd(A.entries, compute_uv=False)[-1]
        lam_min = float(np.min(np.abs(A.eigenvalues)))
    else:
        k0, lam_min = 1.0, 1.0
    c_mu = profile.constant_for(theta)
    if c_mu is None:
        c_mu = max(k0, 1.0) / np.sin(min(theta - profile.omega, np.pi / 2))
    power = profile.gamma + 1.0 + rb

    # near 0 the two rays combine to ~ rho**(1+beta) sin(theta) A^{-1} / pi
    s_min = (np.log(tail * np.pi) - np.log(k0 * np.sin(theta))) / (1.0 + rb)
    s_min = min(s_min, np.log(lam_min) - 4.0)

    def log_env(s):
        return -t * np.exp(alpha * s) * decay + np.log(c_mu) + power * s - np.log(tail)

    # envelope is decreasing beyond its peak
    s_peak = np.log(max(power, 1e-3) / (t * alpha * decay)) / alpha
    s_lo = max(s_peak, np.log(lam_min), s_min + 1.0)
    if log_env(s_lo) <= 0:
        s_max = s_lo
    else:
        s_hi = s_lo + 1.0
        while log_env(s_hi) > 0:
            s_hi += 2.0 * (s_hi - s_lo)
        s_max = brentq(log_env, s_lo, s_hi, xtol=1e-6)

    if nodes is None:
        d = _strip_halfwidth(profile.omega, alpha, theta)
        h = np.pi * d / np.log(1.0 / tol)
        nodes = max(16, int(np.ceil((s_max - s_min) / h)))
    spec = ContourSpec(theta=float(theta), s_min=float(s_min), s_max=float(s_max),
                       N=int(nodes), alpha=float(alpha), t_min=float(t))
    return QuadratureRule.from_spec(spec, tol)


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("ASCALC_THREADS", "1") or 1)
    return max(1, threads)


def _weighted_resolvent_sum(A, f, nodes, weights, X, threads=None):
    """``sum_j w_j f(z_j) (z_j - A)^{-1} X`` in a fixed node order."""
    n = A.n
    k = X.shape[1]
    fz = np.asarray(f(nodes), dtype=complex) * weights
    if not np.all(np.isfinite(fz)):
        raise QuadratureNotConverged("integrand is not finite on the contour")
    chunk = max(1, _CHUNK_ENTRIES // (n * (n + k)))
    starts = range(0, nodes.size, chunk)
    eye = np.eye(n)

    def part(i):
        z = nodes[i:i + chunk]
        M = z[:, None, None] * eye - A.entries
        try:
            Y = np.linalg.solve(M, np.broadcast_to(X, (z.size, n, k)))
        except np.linalg.LinAlgError:
            raise SingularResolvent(complex(z[0]), 0.0) from None
        if not np.all(np.isfinite(Y)):
            raise SingularResolvent(complex(z[0]), 0.0)
        return np.einsum("j,jab->ab", fz[i:i + chunk], Y)

    nthreads = _threads(threads)
    if nthreads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(part, starts))
    else:
        parts = [part(i) for i in starts]
    total = np.zeros((n, k), dtype=complex)
    for p in parts:
        total += p
    return total


def phi_calculus_apply(A, f, rule: QuadratureRule, x, *, check: bool = True,
                       max_doublings: int = 2, threads=None, full_output: bool = False):
    """Evaluate ``(1/2 pi i) int f(z) (z - A)^{-1} x dz`` on ``rule``.

    ``f`` must accept an array of complex nodes.  With ``check`` the node
    count is doubled (reusing the old nodes) until two successive sums agree
    to ``rule.tol * ||x||``; after ``max_doublings`` failures
    :class:`QuadratureNotConverged` is raised.  ``x`` may be a vector or an
    ``n x k`` block of vectors.

    Returns the refined sum, or ``(value, info)`` with ``full_output`` where
    ``info`` holds ``nodes_used``, ``est_error`` and ``spec``.
    """
    A = _as_operator(A)
    x = np.asarray(x)
    vec = x.ndim == 1
    X = x.reshape(A.n, -1)
    xnorm = np.linalg.norm(X)
    spec = rule.spec
    total = _weighted_resolvent_sum(A, f, rule.nodes, rule.weights, X, threads)
    used = rule.nodes.size
    err = np.nan
    if check:
        thresh = max(rule.tol * xnorm, 10 * _EPS * xnorm)
        for _ in range(max_doublings):
            mid = QuadratureRule.from_spec(spec, rule.tol, midpoints=True)
            new = 0.5 * (total + _weighted_resolvent_sum(A, f, mid.nodes, mid.weights, X, threads))
            used += mid.nodes.size
            err = float(np.linalg.norm(new - total))
            total = new
            spec = replace(spec, N=2 * spec.N)
            if err <= thresh:
                break
        else:
            raise QuadratureNotConverged(
                f"node doubling changed the result by {err:.3e} > {thresh:.3e} "
                f"(N={spec.N}, theta={spec.theta:.4f})", estimate=err)
    out = total[:, 0] if vec else total
    if full_output:
        return out, {"nodes_used": used, "est_error": err, "spec": spec}
    return out


def _semigroup_integrand(t, alpha, beta=0.0):
    def f(z):
        za = z if alpha == 1 else z**alpha
        e = np.exp(-t * za)
        return e if beta == 0 else z**beta * e
    return f


def _prepare(A, profile):
    A = _as_operator(A)
    if profile is None:
        profile = estimate_sector(A)
    return A, profile


def power_semigroup_apply(A, profile, alpha, beta, t, x, tol=1e-8, *, theta=None,
                          nodes=None, threads=None, full_output=False):
    """``A**beta T_alpha(t) x`` via the integrand ``z**beta exp(-t z**alpha)``."""
    if not np.real(beta) > 0:
        raise ConfigError(f"power_semigroup_apply needs Re beta > 0, got {beta}")
    return _semigroup(A, profile, alpha, beta, t, x, tol, theta, nodes, threads, full_output)


def semigroup_apply(A, profile, alpha, t, x, tol=1e-8, *, theta=None, nodes=None,
                    threads=None, full_output=False):
    """``T_alpha(t) x``, the contour image of ``exp(-t z**alpha)``.

    ``t = 0`` returns a copy of ``x``.  ``profile=None`` estimates the sector
    profile from ``A``.
    """
    return _semigroup(A, profile, alpha, 0.0, t, x, tol, theta, nodes, threads, full_output)


def _semigroup(A, profile, alpha, beta, t, x, tol, theta, nodes, threads, full_output):
    A, profile = _prepare(A, profile)
    x = np.asarray(x)
    if t == 0 and beta == 0:
        out = x.astype(complex, copy=True)
        return (out, {"nodes_used": 0, "est_error": 0.0, "spec": None}) if full_output else out
    rule = build_contour(profile, alpha, t, tol, A=A, beta=beta, theta=theta, nodes=nodes)
    f = _semigroup_integrand(t, alpha, beta)
    return phi_calculus_apply(A, f, rule, x, check=nodes is None, threads=threads,
                              full_output=full_output)


def semigroup_matrix(A, profile, alpha, t, tol=1e-8, **kw) -> np.ndarray:
    """Materialize ``T_alpha(t)`` by applying it to the identity."""
    A, profile = _prepare(A, profile)
    return semigroup_apply(A, profile, alpha, t, np.eye(A.n), tol, **kw)


def semigroup_derivative(A, profile, alpha, t, x, k: int = 1, tol=1e-8, **kw):
    """``d^k/dt^k T_alpha(t) x = (-1)^k A^{k alpha} T_alpha(t) x``."""
    if k < 1 or int(k) != k:
        raise ConfigError("derivative order must be a positive integer")
    return (-1) ** k * power_semigroup_apply(A, profile, alpha, k * alpha, t, x, tol, **kw)


def tau_semigroup_apply(family, tau, t, x, tol=1e-8, profile=None, **kw):
    """``T_{A(tau)}(t) x``: the ``alpha = 1`` semigroup of the frozen member ``A(tau)``."""
    A = family(tau)
    return semigroup_apply(A, profile, 1.0, t, x, tol, **kw)


class GrowthFit(NamedTuple):
    kappa_eff: float
    C_fit: float
    witness: float
    norms: np.ndarray


def growth_fit(A, profile, alpha, t_grid, tol=1e-8) -> GrowthFit:
    """Fit ``||T_alpha(t)|| ~ C t**-kappa`` over ``t_grid``.

    ``witness`` is ``max_t t**((1 + gamma)/alpha) ||T_alpha(t)||`` over the
    grid, a finite-sample certificate of the growth-order bound.
    """
    A, profile = _prepare(A, profile)
    t_grid = np.asarray(t_grid, float)
    norms = np.array([np.linalg.norm(semigroup_matrix(A, profile, alpha, t, tol), 2)
                      for t in t_grid])
    slope, icpt = np.polyfit(np.log(t_grid), np.log(norms), 1)
    witness = float(np.max(t_grid ** ((1 + profile.gamma) / alpha) * norms))
    return GrowthFit(kappa_eff=float(-slope), C_fit=float(np.exp(icpt)), witness=witness, norms=norms)


def continuity_probe(A, profile, alpha, x, t_sequence, tol=1e-10) -> list[float]:
    """``||T_alpha(t) x - x||`` along a sequence of times decreasing to zero."""
    A, profile = _prepare(A, profile)
    x = np.asarray(x)
    ts = np.asarray(t_sequence, float)
    if np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise ConfigError("t_sequence must be positive and strictly decreasing")
    return [float(np.linalg.norm(semigroup_apply(A, profile, alpha, t, x, tol) - x)) for t in ts]
