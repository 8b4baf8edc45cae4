"""Named test operators and operator families ``A(tau)``.

The registry at the bottom maps short names to constructors so that the
command line, the tests and the demo scripts share one vocabulary, e.g.
``gallery:laplacian(8)`` or ``gallery:diag(1,2)``.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, SectorViolationAtTau, SpectrumOutsideSector
from .operators import OperatorHandle, load_operator

__all__ = [
    "OperatorFamily",
    "diagonal",
    "scalar",
    "jordan_block",
    "dirichlet_laplacian_1d",
    "laplacian_eigenvalues",
    "nonnormal_bidiagonal",
    "random_normal",
    "affine_family",
    "GALLERY",
    "parse_operator",
]


def diagonal(*values) -> OperatorHandle:
    vals = np.asarray(values if len(values) != 1 or np.ndim(values[0]) == 0 else values[0])
    return OperatorHandle(np.diag(vals), label=f"diag({','.join(f'{v:g}' for v in np.ravel(vals))})")


def scalar(value=1.0) -> OperatorHandle:
    return OperatorHandle(np.array([[value]]), label=f"scalar({value:g})")


def jordan_block(value=2.0, n=2) -> OperatorHandle:
    """``value*I + N`` with ones on the superdiagonal (defective)."""
    return OperatorHandle(value * np.eye(n) + np.eye(n, k=1), label=f"jordan({value:g},{n})")


def dirichlet_laplacian_1d(n: int, length: float = np.pi) -> OperatorHandle:
    """Second-difference ``-d^2/dx^2`` on ``(0, length)`` with Dirichlet ends.

    The matrix is ``tridiag(-1, 2, -1) * (n+1)**2 / length**2``.  The default
    length ``pi`` keeps the lowest eigenvalue near 1.
    """
    if n < 1:
        raise ConfigError("laplacian needs n >= 1")
    scale = (n + 1) ** 2 / length**2
    T = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return OperatorHandle(scale * T, label=f"laplacian({n},{length:g})")


def laplacian_eigenvalues(n: int, length: float = np.pi) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 4 * ((n + 1) / length) ** 2 * np.sin(k * np.pi / (2 * (n + 1))) ** 2


def nonnormal_bidiagonal(n: int, d: float = 1.0, c: float = 10.0) -> OperatorHandle:
    """Upper bidiagonal matrix with diagonal ``d`` and superdiagonal ``c``.

    All eigenvalues equal ``d``; for moderate ``|z|`` the resolvent norm grows
    like powers of ``c / |z - d|``, giving an apparent ``gamma > -1``.
    """
    if d <= 0:
        raise ConfigError("bidiagonal needs d > 0")
    return OperatorHandle(d * np.eye(n) + c * np.eye(n, k=1), label=f"bidiagonal({n},{d:g},{c:g})")


def random_normal(n: int, seed: int = 0, spread: float = 0.0) -> OperatorHandle:
    """``Q diag(lambda) Q*`` with Haar-like unitary ``Q``.

    Eigenvalue moduli are ``1..n``; ``spread`` (radians) scatters their
    arguments uniformly in ``[-spread, spread]``.
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    lam = np.arange(1, n + 1, dtype=float)
    if spread:
        lam = lam * np.exp(1j * rng.uniform(-spread, spread, n))
    return OperatorHandle(Q @ np.diag(lam) @ Q.conj().T, label=f"random_normal({n},{seed})")


@dataclass(frozen=True)
class OperatorFamily:
    """Parametrized operators ``tau -> A(tau)``.

    ``form`` is ``"affine"`` (``A0 + tau * B``) or ``"custom"``.
    """

    builder: Callable[[float], OperatorHandle]
    form: str = "custom"
    A0: OperatorHandle | None = None
    B: np.ndarray | None = None
    label: str = ""

    def __call__(self, tau: float) -> OperatorHandle:
        if tau < 0:
            raise ConfigError("tau must be non-negative")
        try:
            return self.builder(float(tau))
        except SpectrumOutsideSector as exc:
            raise SectorViolationAtTau(tau, str(exc)) from None


def affine_family(A0: OperatorHandle, B) -> OperatorFamily:
    """``A(tau) = A0 + tau * B``; ``A(0)`` is ``A0`` itself."""
    Bm = B.entries if isinstance(B, OperatorHandle) else np.asarray(B)
    if Bm.shape != A0.entries.shape:
        raise ConfigError("A0 and B must have the same dimension")
    # B need not be sectorial itself, so it is kept as a raw matrix

    def build(tau):
        if tau == 0:
            return A0
        return OperatorHandle(A0.entries + tau * Bm, label=f"{A0.label}+{tau:g}*B")

    return OperatorFamily(builder=build, form="affine", A0=A0, B=Bm, label=f"affine({A0.label})")


GALLERY: dict[str, Callable[..., OperatorHandle]] = {
    "diag": diagonal,
    "scalar": scalar,
    "jordan": jordan_block,
    "laplacian": dirichlet_laplacian_1d,
    "bidiagonal": nonnormal_bidiagonal,
    "random_normal": random_normal,
}

_REF = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def parse_operator(ref: str) -> OperatorHandle:
    """Resolve ``gallery:<name>(<params>)`` or ``file:<path.json>``."""
    kind, _, rest = ref.partition(":")
    if kind == "file":
        return load_operator(rest)
    if kind != "gallery":
        raise ConfigError(f"operator reference must start with gallery: or file:, got {ref!r}")
    m = _REF.match(rest)
    if not m or m.group(1) not in GALLERY:
        raise ConfigError(f"unknown gallery operator {rest!r}; known: {sorted(GALLERY)}")
    args = ()
    if m.group(2):
        try:
            args = ast.literal_eval(f"({m.group(2)},)")
        except (ValueError, SyntaxError):
            raise ConfigError(f"cannot parse operator parameters {m.group(2)!r}") from None
    try:
        return GALLERY[m.group(1)](*args)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {m.group(1)}: {exc}") from None
