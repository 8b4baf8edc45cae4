"""Recovery of the time coefficient from two observed scalar series.

Two problems share the coefficient: one starts from ``u0``, the other from
``A^alpha u0``.  Because ``A^alpha`` commutes with the semigroup, the time
derivative of the first observation equals ``sigma * phi(t)`` times the
second, giving ``phi = sigma * h1' / h2`` pointwise.  The derivative is the
only numerically delicate step, so it is isolated in :func:`differentiate`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .contour import _semigroup_integrand, build_contour, phi_calculus_apply
from .errors import ConfigError, GridTooSmall, ImaginaryResidueTooLarge, ObservationNearZero
from .evolution import SIGNS, ProblemSpec, _ordered_map, make_clock
from .operators import eig_oracle, estimate_sector, oracle_function_apply

__all__ = [
    "ObservationFunctional",
    "ObservationSeries",
    "RecoveryResult",
    "synthesize_observations",
    "differentiate",
    "recover_phi",
    "recovery_error_report",
    "write_observations_csv",
    "read_observations_csv",
    "write_recovery_csv",
]

IMAG_REPORT = 1e-6
IMAG_REJECT = 1e-3
SMOOTH_WINDOW = 9


@dataclass(frozen=True, eq=False)
class ObservationFunctional:
    """Linear functional ``ell(u)``: a coordinate ``u[q]`` or ``w . u``."""

    kind: str = "coordinate"
    index: int = 0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "weighted":
            w = np.asarray(self.weights, complex)
            if w.ndim != 1 or not np.any(w):
                raise ConfigError("weighted observation needs a nonzero weight vector")
            object.__setattr__(self, "weights", w)
        elif self.kind != "coordinate":
            raise ConfigError(f"unknown observation kind {self.kind!r}")

    @classmethod
    def coordinate(cls, q: int):
        return cls("coordinate", index=int(q))

    @classmethod
    def weighted(cls, w):
        return cls("weighted", weights=w)

    def check_dimension(self, n: int):
        if self.kind == "coordinate" and not 0 <= self.index < n:
            raise ConfigError(f"observation index {self.index} outside dimension {n}")
        if self.kind == "weighted" and self.weights.size != n:
            raise ConfigError(f"weight vector has length {self.weights.size}, state has {n}")

    def __call__(self, u):
        u = np.asarray(u)
        if self.kind == "coordinate":
            return u[..., self.index]
        return u @ self.weights


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    times: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, float)
        h1 = np.asarray(self.h1, complex)
        h2 = np.asarray(self.h2, complex)
        if not (t.shape == h1.shape == h2.shape) or t.ndim != 1:
            raise ConfigError("observation arrays must be one-dimensional and equally long")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("observation times must be strictly increasing")
        if not (np.all(np.isfinite(h1)) and np.all(np.isfinite(h2))):
            raise ConfigError("observations must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    times: np.ndarray
    phi_hat: np.ndarray
    method: str
    diagnostics: dict = field(default_factory=dict)
    dh1: np.ndarray | None = field(default=None, repr=False)
    h2: np.ndarray | None = field(default=None, repr=False)


def synthesize_observations(spec: ProblemSpec, ell: ObservationFunctional, tol: float = 1e-10,
                            *, threads=None) -> ObservationSeries:
    """Observe ``T(eta(t)) u0`` and ``T(eta(t)) A^alpha u0`` through ``ell``.

    Both problems are evaluated with one contour per time (two right-hand
    sides).  ``A^alpha u0`` is a matrix-vector product for ``alpha = 1`` and
    comes from the eigendecomposition oracle otherwise, so defective
    operators with fractional ``alpha`` raise ``IllConditionedEigenbasis``.
    For a family problem ``A(tau)`` is the frozen member.
    """
    A = spec.operator
    ell.check_dimension(A.n)
    if spec.alpha == 1:
        v0 = A.entries @ spec.u0
    else:
        v0 = oracle_function_apply(eig_oracle(A), lambda z: z**spec.alpha, spec.u0)
    X = np.stack([spec.u0.astype(complex), v0], axis=1)
    profile = spec.profile if spec.profile is not None else estimate_sector(A)
    etas = make_clock(spec.phi).eta(spec.grid)
    alpha = spec.alpha

    def step(s):
        rule = build_contour(profile, alpha, s, tol, A=A)
        return phi_calculus_apply(A, _semigroup_integrand(s, alpha), rule, X)

    states = _ordered_map(step, list(etas), threads)
    h1 = np.array([ell(Y[:, 0]) for Y in states])
    h2 = np.array([ell(Y[:, 1]) for Y in states])
    return ObservationSeries(spec.grid.copy(), h1, h2, provenance=f"synthetic:{spec.digest()}")


def _local_quadratic_slopes(values, times, window):
    """Slope at the centre of a least-squares quadratic over each full window."""
    half = window // 2
    n = times.size
    out = np.empty(n - 2 * half, dtype=values.dtype)
    for j, i in enumerate(range(half, n - half)):
        sl = slice(i - half, i + half + 1)
        V = np.vander(times[sl] - times[i], 3)
        out[j] = np.linalg.lstsq(V, values[sl], rcond=None)[0][1]
    return out


def differentiate(values, times, method: str = "central", window: int = SMOOTH_WINDOW):
    """Numerical time derivative of sampled values.

    ``central``
        Three-point formula (non-uniform spacing allowed); exact for
        quadratics.  Returned on the interior points ``times[1:-1]``.
    ``one_sided_ends``
        The central formula inside plus second-order one-sided formulas at
        both ends; returned on every point.
    ``smoothed``
        Slope of a least-squares quadratic over ``window`` samples centred
        on each point.  Returned on ``times[w//2:-(w//2)]``, the points where
        the full window fits; off-centre fits near the ends amplify noise
        several times more than the central formula does.
    """
    values = np.asarray(values)
    times = np.asarray(times, float)
    if values.shape != times.shape:
        raise ConfigError("values and times differ in shape")
    if times.size < 3:
        raise GridTooSmall(f"need at least 3 samples, got {times.size}")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly increasing")
    if method == "central":
        return np.gradient(values, times)[1:-1]
    if method == "one_sided_ends":
        return np.gradient(values, times, edge_order=2)
    if method == "smoothed":
        if window < 3 or window % 2 == 0:
            raise ConfigError("smoothing window must be odd and at least 3")
        if times.size < window:
            raise GridTooSmall(f"need at least {window} samples for the smoothing window")
        return _local_quadratic_slopes(values, times, window)
    raise ConfigError(f"unknown differentiation method {method!r}")


def recover_phi(series: ObservationSeries, method: str = "central",
                sign_convention: str = "consistent", floor: float = 1e-8,
                window: int = SMOOTH_WINDOW) -> RecoveryResult:
    """``phi_hat = sigma * Re(h1' / h2)`` on the differentiation grid.

    For real observations this is ``sigma * Re(h1') / Re(h2)``; taking the
    real part of the ratio keeps the formula valid for complex operators.

    Raises
    ------
    ObservationNearZero
        If ``|h2| < floor * max|h2|`` at a point used.
    ImaginaryResidueTooLarge
        If ``|Im(h1'/h2)|`` exceeds ``1e-3`` of its modulus (values above
        ``1e-6`` are flagged in the diagnostics).
    """
    if sign_convention not in SIGNS:
        raise ConfigError(f"sign convention must be one of {sorted(SIGNS)}")
    sigma = SIGNS[sign_convention]
    d1 = differentiate(series.h1, series.times, method, window)
    if method == "one_sided_ends":
        times, h2 = series.times, series.h2
    else:
        k = window // 2 if method == "smoothed" else 1
        times, h2 = series.times[k:-k], series.h2[k:-k]

    scale = np.max(np.abs(series.h2))
    bad = np.abs(h2) < floor * scale
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ObservationNearZero(float(times[i]), float(abs(h2[i])), floor * scale)

    # phi is real, so any imaginary part of the ratio is quadrature or data noise
    with np.errstate(divide="ignore", invalid="ignore"):
        q = d1 / h2
        mag = np.abs(q)
        resid = float(np.max(np.where(mag > 0, np.abs(q.imag) / mag, 0.0)))
    if resid > IMAG_REJECT:
        raise ImaginaryResidueTooLarge(f"imaginary residue {resid:.3e} exceeds {IMAG_REJECT:g}")
    phi_hat = sigma * q.real
    if not np.all(np.isfinite(phi_hat)):
        raise ObservationNearZero(float(times[np.argmax(~np.isfinite(phi_hat))]), 0.0, floor * scale)
    diagnostics = {
        "min_abs_h2": float(np.min(np.abs(h2))),
        "max_imag_residue": resid,
        "imag_residue_flagged": resid > IMAG_REPORT,
        "sign_convention": sign_convention,
        "method": method,
        "window": window if method == "smoothed" else None,
        "provenance": series.provenance,
    }
    return RecoveryResult(times=times.copy(), phi_hat=phi_hat, method=method,
                          diagnostics=diagnostics, dh1=d1, h2=h2)


def recovery_error_report(result: RecoveryResult, phi_true) -> dict:
    """Pointwise and aggregate relative errors of ``phi_hat`` against ``phi_true``."""
    truth = np.asarray(phi_true(result.times), float)
    diff = result.phi_hat - truth
    per_point = np.abs(diff) / np.abs(truth)
    return {
        "max_rel": float(np.max(per_point)),
        "l2_rel": float(np.linalg.norm(diff) / np.linalg.norm(truth)),
        "per_point": per_point,
    }


def write_observations_csv(series: ObservationSeries, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "h1_re", "h1_im", "h2_re", "h2_im"])
        for t, a, b in zip(series.times, series.h1, series.h2):
            w.writerow([f"{v:.17g}" for v in (t, a.real, a.imag, b.real, b.imag)])


def read_observations_csv(path) -> ObservationSeries:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    if [h.strip() for h in header] != ["t", "h1_re", "h1_im", "h2_re", "h2_im"]:
        raise ConfigError(f"{path}: expected header t,h1_re,h1_im,h2_re,h2_im")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ObservationSeries(data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4],
                             provenance=f"file:{path}")


def write_recovery_csv(result: RecoveryResult, path, sidecar=True):
    """``t,phi_hat`` rows plus ``<path>.diagnostics.json``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "phi_hat"])
        for t, p in zip(result.times, result.phi_hat):
            w.writerow([f"{t:.17g}", f"{p:.17g}"])
    if sidecar:
        with open(f"{path}.diagnostics.json", "w") as fh:
            json.dump(result.diagnostics, fh, indent=2, sort_keys=True)
