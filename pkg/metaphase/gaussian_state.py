"""
Gaussian mixed states described by a covariance matrix ``V`` and a mean
``zbar``, with Wigner distribution

    rho(z) = (2 pi)^-n det(V)^-1/2 exp(-1/2 V^-1 (z - zbar).(z - zbar))
"""

import dataclasses
import logging
import typing

import numpy as np

from . import symplectic_core as sc
from .errors import DimensionError, InadmissibleState, NotPositiveDefinite, NotSymmetric

logger = logging.getLogger("metaphase")

#: slack allowed on the uncertainty principle
ADMISSIBILITY_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class GaussianState:
    V: np.ndarray
    mean: typing.Optional[np.ndarray] = None
    hbar: float = 1.0

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        n = sc.mode_count(V)
        if np.max(np.abs(V - V.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(V))):
            raise NotSymmetric("covariance matrix must be symmetric")
        V = sc.sym(V)
        if np.linalg.eigvalsh(V)[0] <= 0:
            raise NotPositiveDefinite("covariance matrix must be positive definite")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive (got {self.hbar})")

        mean = np.zeros(2 * n) if self.mean is None else np.asarray(self.mean, dtype=float)
        if mean.shape != (2 * n,):
            raise DimensionError(f"mean must have {2 * n} components (got {mean.shape})")

        V.flags.writeable = False
        mean = mean.copy()
        mean.flags.writeable = False
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def n(self) -> int:
        return self.V.shape[0] // 2

    @property
    def F(self) -> np.ndarray:
        """``F = (hbar/2) V^-1``; the identity for a standard coherent state"""
        return sc.sym(0.5 * self.hbar * np.linalg.inv(self.V))

    @property
    def is_centered(self) -> bool:
        return not np.any(self.mean)

    def shifted(self, w: np.ndarray) -> "GaussianState":
        return GaussianState(self.V, self.mean + np.asarray(w, dtype=float), self.hbar)


@dataclasses.dataclass(frozen=True)
class SqueezedSpec:
    """Pure state ``psi(x) ~ exp(-(X + iY)x.x / 2hbar)``"""

    X: np.ndarray
    Y: typing.Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        n = X.shape[0]
        Y = np.zeros((n, n)) if self.Y is None else np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape != (n, n) or Y.shape != (n, n):
            raise DimensionError("X and Y must be square matrices of the same size")
        for name, mat in (("X", X), ("Y", Y)):
            if np.max(np.abs(mat - mat.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(mat))):
                raise NotSymmetric(f"squeezing matrix {name} must be symmetric")
        if np.linalg.eigvalsh(sc.sym(X))[0] <= 0:
            raise NotPositiveDefinite("squeezing matrix X must be positive definite")
        object.__setattr__(self, "X", sc.sym(X))
        object.__setattr__(self, "Y", sc.sym(Y))

    @property
    def G(self) -> np.ndarray:
        """Symmetric symplectic matrix of the Wigner exponent ``-Gz.z/hbar``"""
        X_inv = np.linalg.inv(self.X)
        Y = self.Y
        return sc.sym(np.block([[self.X + Y @ X_inv @ Y, Y @ X_inv], [X_inv @ Y, X_inv]]))


class AdmissibilityReport(typing.NamedTuple):
    #: smallest eigenvalue of the Hermitian matrix V + i(hbar/2)J
    min_eigenvalue: float
    #: smallest symplectic eigenvalue of V
    min_symplectic_eigenvalue: float
    hbar: float
    tol: float

    @property
    def eigenvalue_test(self) -> bool:
        return self.min_eigenvalue >= -self.tol

    @property
    def symplectic_test(self) -> bool:
        return self.min_symplectic_eigenvalue >= self.hbar / 2 - self.tol

    @property
    def admissible(self) -> bool:
        return self.eigenvalue_test and self.symplectic_test

    def raise_if_inadmissible(self):
        if not self.admissible:
            raise InadmissibleState(
                "state violates the uncertainty principle: smallest symplectic "
                f"eigenvalue {self.min_symplectic_eigenvalue!r} < hbar/2 = {self.hbar / 2!r}",
                self.min_symplectic_eigenvalue,
            )


def symplectic_eigenvalues(V: np.ndarray) -> np.ndarray:
    """Moduli of the eigenvalues of ``JV``, one per mode, ascending"""
    V = np.asarray(V, dtype=float)
    J = sc.standard_form(sc.mode_count(V))
    w = np.sort(np.abs(np.linalg.eigvals(J @ V).imag))
    return w[::2]


def validate(state: GaussianState, tol: float = ADMISSIBILITY_TOL) -> AdmissibilityReport:
    J = sc.standard_form(state.n)
    H = state.V + 0.5j * state.hbar * J
    return AdmissibilityReport(
        min_eigenvalue=float(np.linalg.eigvalsh(H)[0]),
        min_symplectic_eigenvalue=float(symplectic_eigenvalues(state.V)[0]),
        hbar=state.hbar,
        tol=tol,
    )


def purity(state: GaussianState) -> float:
    """``mu = (hbar/2)^n det(V)^-1/2``"""
    validate(state).raise_if_inadmissible()
    sign, logdet = np.linalg.slogdet(state.V)
    return float(np.exp(state.n * np.log(state.hbar / 2) - 0.5 * logdet))


def wigner_value(state: GaussianState, z: np.ndarray) -> np.ndarray:
    """Wigner distribution at ``z`` (any leading batch shape)"""
    z = np.asarray(z, dtype=float)
    d = z - state.mean
    V_inv = np.linalg.inv(state.V)
    quad = np.einsum("...i,ij,...j->...", d, V_inv, d)
    norm = (2 * np.pi) ** (-state.n) / np.sqrt(np.linalg.det(state.V))
    return norm * np.exp(-0.5 * quad)


def characteristic_value(state: GaussianState, z: np.ndarray) -> np.ndarray:
    """
    Symplectic Fourier transform of the Wigner distribution,

        rho_sigma(z) = (2 pi hbar)^-n exp(-(i/hbar) sigma(z, zbar) - (1/4hbar) F^-1 Jz.Jz)

    The mean only contributes the phase: with ``Z`` distributed as ``rho``,
    ``E exp(-(i/hbar) Jz.Z)`` has the Gaussian closed form above since
    ``F^-1 = (2/hbar) V``.
    """
    z = np.asarray(z, dtype=float)
    J = sc.standard_form(state.n)
    Jz = z @ J.T
    quad = np.einsum("...i,ij,...j->...", Jz, state.V, Jz)
    phase = sc.sigma(z, state.mean)
    return (2 * np.pi * state.hbar) ** (-state.n) * np.exp(
        -1j * phase / state.hbar - quad / (2 * state.hbar**2)
    )


def transform(S: np.ndarray, shift: typing.Optional[np.ndarray], state: GaussianState) -> GaussianState:
    """State after ``T(shift) S``: ``V -> S V S^T`` and ``zbar -> S zbar + shift``"""
    S = sc.check_symplectic(S, relative=True)
    mean = S @ state.mean
    if shift is not None:
        mean = mean + np.asarray(shift, dtype=float)
    return GaussianState(sc.sym(S @ state.V @ S.T), mean, state.hbar)


def coherent(n: int = 1, hbar: float = 1.0, mean: typing.Optional[np.ndarray] = None) -> GaussianState:
    return GaussianState(0.5 * hbar * np.eye(2 * n), mean, hbar)


def thermal(
    nbar: typing.Optional[typing.Sequence[float]] = None,
    omegas: typing.Optional[typing.Sequence[float]] = None,
    beta: typing.Optional[float] = None,
    hbar: float = 1.0,
    mean: typing.Optional[np.ndarray] = None,
) -> GaussianState:
    """
    Thermal state of independent oscillators, from mean occupations or from
    frequencies and an inverse temperature (``nbar = 1/(e^(beta hbar w) - 1)``)
    """
    if nbar is None:
        if omegas is None or beta is None:
            raise ValueError("thermal state needs nbar, or omegas and beta")
        omegas = np.asarray(omegas, dtype=float)
        if np.any(omegas <= 0) or not beta > 0:
            raise ValueError("thermal frequencies and beta must be positive")
        occupations = 1.0 / np.expm1(beta * hbar * omegas)
    else:
        occupations = np.atleast_1d(np.asarray(nbar, dtype=float))
        if np.any(occupations < 0):
            raise ValueError("mean occupations must be non-negative")
    nu = hbar * (occupations + 0.5)
    return GaussianState(np.diag(np.concatenate([nu, nu])), mean, hbar)


def squeezed_pure(
    spec: SqueezedSpec, hbar: float = 1.0, mean: typing.Optional[np.ndarray] = None
) -> GaussianState:
    """``V = (hbar/2) G^-1``"""
    G = spec.G
    return GaussianState(sc.sym(0.5 * hbar * np.linalg.inv(G)), mean, hbar)
