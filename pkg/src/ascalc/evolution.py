"""Cauchy problems with a scalar time coefficient.

For ``u' = -phi(t) A^alpha u`` the substitution ``s = eta(t) = int_0^t phi``
turns the equation into the autonomous one, so the solution at time ``t``
is the semigroup evaluated at the accumulated time ``eta(t)``.  This module
builds the clock ``eta`` and its inverse ``zeta``, evaluates trajectories
through the contour semigroup, and provides an RK4 integrator on the dense
matrix ``A^alpha`` as an independent check.

Sign conventions
----------------
The contour semigroup ``T(t)`` satisfies ``T'(t) = -A^alpha T(t)``.  Under
``"consistent"`` (the default) the equation solved is therefore
``u' = -phi A^alpha u``.  ``"paper"`` keeps the same trajectory for the
direct solver and only flips the sign used downstream by the coefficient
recovery; :func:`reference_ode_solve` under ``"paper"`` integrates the
literal ``u' = +phi A^alpha u`` so the discrepancy can be inspected.
"""

from __future__ import annotations

import ast
import csv
import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .contour import _threads, semigroup_apply, tau_semigroup_apply
from .errors import ConfigError, EtaUnderflow, NonPositiveCoefficient
from .gallery import OperatorFamily
from .operators import OperatorHandle, dense_function, estimate_sector

__all__ = [
    "CoefficientFn",
    "constant",
    "affine",
    "sine",
    "sampled",
    "parse_phi",
    "RescaledClock",
    "make_clock",
    "ProblemSpec",
    "Trajectory",
    "solve_direct",
    "reference_ode_solve",
    "solve_direct_nonautonomous",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

SIGNS = {"consistent": -1.0, "paper": 1.0}
_PROBE_POINTS = 2048


@dataclass(frozen=True, eq=False)
class CoefficientFn:
    """Continuous ``phi`` on ``[0, T]`` with ``phi(t) > 0`` for ``t > 0``.

    Positivity is probed on a dense grid at construction; evaluation accepts
    scalars or arrays.
    """

    func: Callable
    T: float = 1.0
    kind: str = "closed_form"
    name: str = ""
    params: tuple = ()
    antiderivative: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("coefficient domain needs T > 0")
        probe = np.linspace(0.0, self.T, _PROBE_POINTS + 1)[1:]
        vals = np.asarray(self.func(probe), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            i = int(np.argmax(~np.isfinite(vals) | (vals <= 0)))
            raise NonPositiveCoefficient(f"phi={self.name} is not positive at t={probe[i]:.6g}")
        if not np.isfinite(float(np.asarray(self.func(np.array([0.0])))[0])):
            raise NonPositiveCoefficient(f"phi={self.name} is not finite at t=0")

    def __call__(self, t):
        return self.func(t)

    def __repr__(self):
        return f"CoefficientFn({self.name}, T={self.T:g})"


def constant(c: float = 1.0, T: float = 1.0) -> CoefficientFn:
    # exact antiderivative so that eta(t) = c*t to the last bit
    return CoefficientFn(lambda t: np.full(np.shape(t), float(c)) if np.ndim(t) else float(c),
                         T=T, name=f"const({c:g})", params=(c,),
                         antiderivative=lambda t: float(c) * t)


def affine(a: float = 1.0, b: float = 1.0, T: float = 1.0) -> CoefficientFn:
    """``phi(t) = a + b t``."""
    return CoefficientFn(lambda t: a + b * np.asarray(t, float), T=T,
                         name=f"affine({a:g},{b:g})", params=(a, b))


def sine(a: float = 1.0, b: float = 1.0, w: float = 1.0, T: float = 1.0) -> CoefficientFn:
    """``phi(t) = a + b sin(w t)``."""
    return CoefficientFn(lambda t: a + b * np.sin(w * np.asarray(t, float)), T=T,
                         name=f"sine({a:g},{b:g},{w:g})", params=(a, b, w))


def sampled(times, values, T: float | None = None) -> CoefficientFn:
    """Monotone piecewise-cubic interpolant through samples of ``phi``."""
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    if times.size < 2 or np.any(np.diff(times) <= 0):
        raise ConfigError("sampled coefficient needs strictly increasing times")
    if times[0] > 0:
        raise ConfigError("sampled coefficient must cover t=0")
    interp = PchipInterpolator(times, values, extrapolate=False)
    return CoefficientFn(interp, T=float(times[-1] if T is None else T), kind="sampled",
                         name=f"sampled[{times.size}]", params=(times, values),
                         antiderivative=interp.antiderivative())


_PHI_FORMS = {"const": constant, "affine": affine, "sine": sine}
_FORM = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_phi(text: str, T: float = 1.0) -> CoefficientFn:
    """``const(c)``, ``affine(a,b)``, ``sine(a,b[,w])`` or ``csv:<path>`` (columns ``t,phi``)."""
    if text.startswith("csv:"):
        data = np.loadtxt(text[4:], delimiter=",", skiprows=1, ndmin=2)
        return sampled(data[:, 0], data[:, 1])
    m = _FORM.match(text)
    if not m or m.group(1) not in _PHI_FORMS:
        raise ConfigError(f"unknown coefficient {text!r}; forms: {sorted(_PHI_FORMS)} or csv:<path>")
    try:
        args = ast.literal_eval(f"({m.group(2)},)") if m.group(2).strip() else ()
        return _PHI_FORMS[m.group(1)](*args, T=T)
    except (ValueError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"bad coefficient parameters in {text!r}: {exc}") from None


@dataclass(frozen=True, eq=False)
class RescaledClock:
    """Accumulated coefficient ``eta(t)`` and its inverse ``zeta(s)``."""

    phi: CoefficientFn
    quad_tol: float = 1e-12

    def _eta1(self, t: float) -> float:
        if t == 0:
            return 0.0
        anti = self.phi.antiderivative
        if anti is not None:
            return float(anti(t) - anti(0.0))
        val, _ = quad(lambda r: float(self.phi(r)), 0.0, t, epsabs=self.quad_tol,
                      epsrel=self.quad_tol, limit=200)
        return val

    def eta(self, t):
        if np.ndim(t) == 0:
            return self._eta1(float(t))
        return np.array([self._eta1(float(ti)) for ti in np.ravel(t)]).reshape(np.shape(t))

    def _zeta1(self, s: float) -> float:
        if s == 0:
            return 0.0
        if s < 0:
            raise ConfigError("zeta is defined for s >= 0")
        hi = self.phi.T
        while self._eta1(hi) < s:
            hi *= 2.0
        t = brentq(lambda r: self._eta1(r) - s, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        # Newton polish with zeta' = 1 / phi(zeta)
        p = float(self.phi(t))
        if p > 0:
            t -= (self._eta1(t) - s) / p
        return t

    def zeta(self, s):
        if np.ndim(s) == 0:
            return self._zeta1(float(s))
        return np.array([self._zeta1(float(si)) for si in np.ravel(s)]).reshape(np.shape(s))


def make_clock(phi: CoefficientFn, T: float | None = None, quad_tol: float = 1e-12) -> RescaledClock:
    """Clock for ``phi``; ``T`` extends the positivity probe if larger than ``phi.T``."""
    if T is not None and T > phi.T:
        phi = CoefficientFn(phi.func, T=T, kind=phi.kind, name=phi.name, params=phi.params,
                            antiderivative=phi.antiderivative)
    return RescaledClock(phi=phi, quad_tol=quad_tol)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of ``u' = sigma phi(t) A^alpha u``, ``u(0) = u0``, sampled on ``grid``.

    For the frozen non-autonomous problem pass ``family`` and ``tau``; the
    operator is then ``family(tau)`` and ``alpha`` must be 1.
    """

    operator: OperatorHandle | None
    alpha: float
    phi: CoefficientFn
    u0: np.ndarray
    grid: np.ndarray
    sign_convention: str = "consistent"
    family: OperatorFamily | None = None
    tau: float | None = None
    profile: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.family is not None:
            if self.tau is None:
                raise ConfigError("family problems need tau")
            if self.alpha != 1:
                raise ConfigError("the frozen-tau problem is defined for alpha = 1 only")
            object.__setattr__(self, "operator", self.family(self.tau))
        if self.operator is None:
            raise ConfigError("problem needs an operator or a family")
        if self.sign_convention not in SIGNS:
            raise ConfigError(f"sign convention must be one of {sorted(SIGNS)}")
        u0 = np.asarray(self.u0)
        grid = np.asarray(self.grid, float)
        if u0.shape != (self.operator.n,):
            raise ConfigError(f"u0 has shape {u0.shape}, operator dimension is {self.operator.n}")
        if grid.ndim != 1 or grid.size < 1 or grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise ConfigError("grid must be strictly increasing inside (0, T]")
        if grid[-1] > self.phi.T * (1 + 1e-12):
            raise ConfigError(f"grid ends at {grid[-1]} beyond the coefficient domain T={self.phi.T}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "grid", grid)

    @property
    def A(self) -> OperatorHandle:
        return self.operator

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.operator.entries).tobytes())
        h.update(np.ascontiguousarray(self.u0).tobytes())
        h.update(self.grid.tobytes())
        h.update(f"{self.alpha!r}|{self.phi.name}|{self.sign_convention}|{self.tau!r}".encode())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("trajectory states and times differ in length")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory has non-finite states")

    def __len__(self):
        return self.times.size


def _ordered_map(fun, items, threads):
    nthreads = _threads(threads)
    if nthreads > 1 and len(items) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            return list(pool.map(fun, items))
    return [fun(i) for i in items]


def solve_direct(spec: ProblemSpec, tol: float = 1e-10, *, t_min: float = 1e-10,
                 threads=None) -> Trajectory:
    """``u(t_i) = T_alpha(eta(t_i)) u0`` on the grid of ``spec``.

    With ``phi == 1`` this is the plain semigroup trajectory.  Raises
    :class:`EtaUnderflow` if ``eta`` at the first grid point is below
    ``t_min``.
    """
    A = spec.operator
    profile = spec.profile if spec.profile is not None else estimate_sector(A)
    clock = make_clock(spec.phi)
    etas = clock.eta(spec.grid)
    if etas[0] < t_min:
        raise EtaUnderflow(f"eta({spec.grid[0]:.3g})={etas[0]:.3e} below contour validity {t_min:.1e}")
    if spec.family is not None:
        def step(s):
            return tau_semigroup_apply(spec.family, spec.tau, s, spec.u0, tol, profile=profile)
        solver = "contour-tau"
    else:
        def step(s):
            return semigroup_apply(A, profile, spec.alpha, s, spec.u0, tol)
        solver = "contour"
    states = np.array(_ordered_map(step, list(etas), threads))
    return Trajectory(times=spec.grid.copy(), states=states,
                      meta={"spec": spec.digest(), "solver": solver, "eta": etas,
                            "sign_convention": spec.sign_convention})


def solve_direct_nonautonomous(family: OperatorFamily, tau: float, phi: CoefficientFn, u0, grid,
                               tol: float = 1e-10, **kw) -> Trajectory:
    """``u(t_i) = T_{A(tau)}(eta(t_i)) u0`` for the frozen member ``A(tau)``."""
    spec = ProblemSpec(operator=None, alpha=1.0, phi=phi, u0=u0, grid=grid, family=family, tau=tau)
    return solve_direct(spec, tol, **kw)


def _power_matrix(A: OperatorHandle, alpha: float) -> np.ndarray:
    if alpha == 1:
        return A.entries.astype(complex)
    return dense_function(A, lambda z: z**alpha, lambda z: alpha * z ** (alpha - 1))


def reference_ode_solve(spec: ProblemSpec, h: float = 1e-3) -> Trajectory:
    """Classical RK4 for ``u' = sigma phi(t) M u`` with ``M = A^alpha`` dense.

    ``sigma`` is -1 under ``"consistent"`` and +1 under ``"paper"``.  Each
    interval between grid points is split into equal substeps no longer
    than ``h``.
    """
    M = _power_matrix(spec.operator, spec.alpha)
    sigma = SIGNS[spec.sign_convention]
    phi = spec.phi

    def rhs(t, u):
        return sigma * float(phi(t)) * (M @ u)

    u = spec.u0.astype(complex)
    t = 0.0
    out = []
    for target in spec.grid:
        m = max(1, int(np.ceil((target - t) / h - 1e-9)))
        dt = (target - t) / m
        for j in range(m):
            tj = t + j * dt
            k1 = rhs(tj, u)
            k2 = rhs(tj + dt / 2, u + dt / 2 * k1)
            k3 = rhs(tj + dt / 2, u + dt / 2 * k2)
            k4 = rhs(tj + dt, u + dt * k3)
            u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out.append(u.copy())
    return Trajectory(times=spec.grid.copy(), states=np.array(out),
                      meta={"spec": spec.digest(), "solver": f"rk4(h={h:g})",
                            "sign_convention": spec.sign_convention})


def write_trajectory_csv(traj: Trajectory, path, include_t0: np.ndarray | None = None):
    """``t,re_0,im_0,...`` with 17 significant digits.

    ``include_t0`` prepends a row at ``t = 0`` holding the given initial state.
    """
    n = traj.states.shape[1]
    header = ["t"] + [f"{p}_{i}" for i in range(n) for p in ("re", "im")]
    rows = list(zip(traj.times, traj.states))
    if include_t0 is not None:
        rows.insert(0, (0.0, np.asarray(include_t0, complex)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, u in rows:
            vals = [f"{t:.17g}"]
            for c in u:
                vals += [f"{c.real:.17g}", f"{c.imag:.17g}"]
            w.writerow(vals)


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    states = data[:, 1::2] + 1j * data[:, 2::2]
    return Trajectory(times=data[:, 0], states=states, meta={"source": str(path)})
