"""Matrix realizations of almost sectorial operators.

An :class:`OperatorHandle` wraps a dense square matrix whose spectrum lies in
the open right half-plane.  On top of it this module offers resolvent solves,
an empirical estimate of the sector profile ``(omega, gamma, C_mu)`` and an
eigendecomposition oracle that evaluates ``f(A) x`` independently of any
contour quadrature.

Finite matrices always have resolvents decaying like ``|z|**-1`` for large
``|z|``, so a fitted ``gamma > -1`` is a statement about the sampled window
only; the window is stored alongside the fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BranchCutViolation,
    ConfigError,
    IllConditionedEigenbasis,
    NotAlmostSectorial,
    SingularResolvent,
    SpectrumOutsideSector,
)

__all__ = [
    "OperatorHandle",
    "SectorProfile",
    "EigDecomposition",
    "resolvent_apply",
    "resolvent_norms",
    "estimate_sector",
    "eig_oracle",
    "oracle_function_apply",
    "oracle_matrix_function",
    "dense_function",
    "load_operator",
    "dump_operator",
]

HALF_PI = 0.5 * np.pi
TOL_SOLVE = 1e-10
TOL_RECONSTRUCT = 1e-8
COND_MAX = 1e8


def _sorted_eigenvalues(lam):
    # modulus first, argument second; deterministic regardless of LAPACK order
    order = np.lexsort((np.round(np.angle(lam), 14), np.round(np.abs(lam), 14)))
    return order


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    """Dense ``n x n`` matrix with spectrum inside ``|arg z| < pi/2``.

    Parameters
    ----------
    entries : array_like
        Square matrix.  Real input stays real so that conjugate symmetry of
        contour sums is preserved.
    label : str
        Free-form name, used by the gallery registry and in output metadata.
    """

    entries: np.ndarray
    label: str = ""
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ConfigError(f"operator must be a non-empty square matrix, got shape {a.shape}")
        if np.iscomplexobj(a):
            a = a.astype(complex)
            if not np.any(a.imag):
                a = a.real.copy()
        else:
            a = a.astype(float)
        if not np.all(np.isfinite(a)):
            raise ConfigError("operator entries must be finite")
        a.setflags(write=False)
        lam = np.linalg.eigvals(a)
        lam = lam[_sorted_eigenvalues(lam)]
        if np.any(lam.real <= 0) or np.any(np.abs(np.angle(lam)) >= HALF_PI):
            bad = lam[(lam.real <= 0) | (np.abs(np.angle(lam)) >= HALF_PI)]
            raise SpectrumOutsideSector(
                f"eigenvalues {bad} of {self.label or 'operator'} violate |arg| < pi/2"
            )
        lam.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    @property
    def spectral_angle(self) -> float:
        """``max |arg lambda|`` over the spectrum."""
        return float(np.max(np.abs(np.angle(self.eigenvalues))))

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def __matmul__(self, x):
        return self.entries @ np.asarray(x)

    def __repr__(self):
        return f"OperatorHandle(n={self.n}, label={self.label!r})"


@dataclass(frozen=True)
class SectorProfile:
    """Sector half-angle, resolvent growth exponent and its constants.

    ``constants`` is a list of ``(mu, C_mu)`` pairs; each pair certifies
    ``||(z - A)^{-1}|| <= C_mu |z|**gamma`` on every sample with
    ``|arg z| > mu`` inside ``fit_window``.
    """

    omega: float
    gamma: float
    constants: tuple = ()
    fit_window: tuple = (np.nan, np.nan)

    def __post_init__(self):
        if not 0.0 <= self.omega < HALF_PI:
            raise ConfigError(f"omega={self.omega} outside [0, pi/2)")
        if not -1.0 <= self.gamma < 0.0:
            raise ConfigError(f"gamma={self.gamma} outside [-1, 0)")
        consts = tuple((float(m), float(c)) for m, c in self.constants)
        for mu, c in consts:
            if not (self.omega < mu < np.pi) or not c > 0:
                raise ConfigError(f"bad sector constant (mu={mu}, C={c}) for omega={self.omega}")
        object.__setattr__(self, "constants", consts)
        object.__setattr__(self, "fit_window", tuple(float(r) for r in self.fit_window))

    def constant_for(self, theta: float):
        """Best recorded ``C_mu`` usable on the ray ``|arg z| = theta``, or None."""
        usable = [c for mu, c in self.constants if mu < theta]
        return min(usable) if usable else None

    def to_json(self) -> dict:
        return {
            "omega": self.omega,
            "gamma": self.gamma,
            "constants": [list(p) for p in self.constants],
            "fit_window": list(self.fit_window),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SectorProfile":
        return cls(
            omega=float(d["omega"]),
            gamma=float(d["gamma"]),
            constants=tuple(tuple(p) for p in d.get("constants", ())),
            fit_window=tuple(d.get("fit_window", (np.nan, np.nan))),
        )


@dataclass(frozen=True, eq=False)
class EigDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    cond: float


def _as_operator(A) -> OperatorHandle:
    return A if isinstance(A, OperatorHandle) else OperatorHandle(np.asarray(A))


def resolvent_apply(A, z, x, tol_solve: float = TOL_SOLVE):
    """Return ``y = (zI - A)^{-1} x``.

    Raises
    ------
    SingularResolvent
        If the solve fails or its relative residual exceeds ``tol_solve``.
    """
    A = _as_operator(A)
    x = np.asarray(x)
    M = z * np.eye(A.n) - A.entries
    try:
        y = np.linalg.solve(M, x)
    except np.linalg.LinAlgError:
        raise SingularResolvent(z, 0.0) from None
    resid = np.linalg.norm(M @ y - x)
    bound = tol_solve * (abs(z) + A.norm()) * np.linalg.norm(y)
    if not np.all(np.isfinite(y)) or resid > bound:
        raise SingularResolvent(z, 1.0 / np.linalg.cond(M))
    return y


def resolvent_norms(A, zs) -> np.ndarray:
    """Spectral norms ``||(z - A)^{-1}||`` for an array of points ``zs``."""
    A = _as_operator(A)
    zs = np.asarray(zs, dtype=complex).ravel()
    M = zs[:, None, None] * np.eye(A.n) - A.entries
    smin = np.linalg.svd(M, compute_uv=False)[:, -1]
    with np.errstate(divide="ignore"):
        return 1.0 / smin


def _default_rays(omega):
    lo = omega + 0.25 * (np.pi - omega)
    angles = np.linspace(lo, np.pi, 4)
    return np.concatenate([angles, -angles[:-1]])


def estimate_sector(A, rays=None, radii=None) -> SectorProfile:
    """Estimate ``omega``, ``gamma`` and ``C_mu`` from resolvent samples.

    ``omega`` is the largest eigenvalue argument.  ``gamma`` is the slope of a
    least-squares line through ``(log r, log ||(r e^{i psi} - A)^{-1}||)``
    pooled over every ray ``psi`` and radius ``r``.  Slopes below -1 are
    clamped to -1; non-negative slopes are rejected.

    For each distinct ``|psi|`` a constant is recorded at ``mu`` halfway
    between that ray and the next smaller one (or ``omega``); it is the
    smallest value satisfying the bound on every sample with ``|arg z| > mu``.
    """
    A = _as_operator(A)
    omega = A.spectral_angle
    if omega >= HALF_PI:
        raise SpectrumOutsideSector(f"spectral angle {omega} >= pi/2")
    rays = _default_rays(omega) if rays is None else np.atleast_1d(np.asarray(rays, float))
    if radii is None:
        rmax = float(np.max(np.abs(A.eigenvalues)))
        radii = rmax * np.logspace(1, 4, 13)
    radii = np.atleast_1d(np.asarray(radii, float))
    if np.any(np.abs(rays) <= omega):
        raise ConfigError(f"every ray must satisfy |psi| > omega={omega:.6g}")
    if radii.size < 2 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ConfigError("radii must be positive, strictly increasing, at least two points")

    psi_grid, r_grid = np.meshgrid(rays, radii, indexing="ij")
    zs = r_grid * np.exp(1j * psi_grid)
    norms = resolvent_norms(A, zs).reshape(zs.shape)
    if not np.all(np.isfinite(norms)):
        raise ConfigError("a resolvent sample hit the spectrum")

    slope = np.polyfit(np.log(r_grid.ravel()), np.log(norms.ravel()), 1)[0]
    if slope >= 0:
        raise NotAlmostSectorial(f"fitted resolvent exponent {slope:.4f} >= 0")
    gamma = float(max(slope, -1.0))

    ratio = norms / r_grid**gamma
    abs_rays = np.abs(rays)
    levels = np.unique(abs_rays)
    constants = []
    below = omega
    for a in levels:
        mask = abs_rays >= a
        c = float(np.max(ratio[mask])) * (1.0 + 8 * np.finfo(float).eps)
        constants.append((0.5 * (below + a), c))
        below = a
    return SectorProfile(omega=omega, gamma=gamma, constants=tuple(constants),
                         fit_window=(float(radii[0]), float(radii[-1])))


def eig_oracle(A, cond_max: float = COND_MAX, tol_reconstruct: float = TOL_RECONSTRUCT) -> EigDecomposition:
    """Eigendecomposition used as ground truth for matrix functions.

    Raises
    ------
    IllConditionedEigenbasis
        When ``cond(V) > cond_max`` (defective or nearly defective input).
    """
    A = _as_operator(A)
    lam, V = np.linalg.eig(A.entries)
    order = _sorted_eigenvalues(lam)
    lam, V = lam[order], V[:, order]
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditionedEigenbasis(cond, cond_max)
    Vinv = np.linalg.inv(V)
    err = np.linalg.norm(V @ np.diag(lam) @ Vinv - A.entries, 2)
    if err > tol_reconstruct * A.norm():
        raise IllConditionedEigenbasis(cond, cond_max)
    return EigDecomposition(eigenvalues=lam, vectors=V, inverse=Vinv, cond=cond)


def _eval_on_spectrum(decomp, f):
    lam = decomp.eigenvalues
    if np.any((lam.real <= 0) & (lam.imag == 0)):
        raise BranchCutViolation("eigenvalue on the closed negative real axis")
    vals = np.array([complex(f(l)) for l in lam])
    if not np.all(np.isfinite(vals)):
        raise ValueError("f is not finite on the spectrum")
    return vals


def oracle_function_apply(decomp: EigDecomposition, f, x):
    """``f(A) x = V diag(f(lambda)) V^{-1} x`` (principal branches)."""
    vals = _eval_on_spectrum(decomp, f)
    x = np.asarray(x)
    coeff = decomp.inverse @ x
    scaled = vals[:, None] * coeff if coeff.ndim == 2 else vals * coeff
    return decomp.vectors @ scaled


def oracle_matrix_function(decomp: EigDecomposition, f) -> np.ndarray:
    vals = _eval_on_spectrum(decomp, f)
    return (decomp.vectors * vals) @ decomp.inverse


def dense_function(A, f, df=None) -> np.ndarray:
    """Materialize ``f(A)``.

    Uses :func:`eig_oracle`; a defective 2x2 input falls back to the closed
    form ``f(l) I + f'(l) (A - l I)``, which is exact because ``(A - lI)^2 = 0``
    for a double eigenvalue ``l``.  ``df`` is required for that fallback.
    """
    A = _as_operator(A)
    try:
        return oracle_matrix_function(eig_oracle(A), f)
    except IllConditionedEigenbasis:
        if A.n != 2 or df is None:
            raise
        lam = complex(np.trace(A.entries)) / 2
        N = A.entries - lam * np.eye(2)
        if np.linalg.norm(N @ N) > 1e-10 * max(1.0, np.linalg.norm(A.entries)) ** 2:
            raise
        return complex(f(lam)) * np.eye(2) + complex(df(lam)) * N


def load_operator(path, label=None) -> OperatorHandle:
    """Read ``{"n", "re", "im"?, "label"}`` JSON."""
    with open(path) as fh:
        d = json.load(fh)
    try:
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float) if "im" in d else np.zeros_like(re)
        n = int(d["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed operator file {path}: {exc}") from None
    if re.shape != (n, n) or im.shape != (n, n):
        raise ConfigError(f"operator file {path}: entries do not match n={n}")
    entries = re + 1j * im if np.any(im) else re
    return OperatorHandle(entries, label=label or d.get("label", Path(path).stem))


def dump_operator(A: OperatorHandle, path=None) -> dict:
    d = {"n": A.n, "re": A.entries.real.tolist(), "label": A.label}
    if not A.is_real:
        d["im"] = A.entries.imag.tolist()
    if path is not None:
        with open(path, "w") as fh:
            json.dump(d, fh)
    return d
