"""
Brute-force reference values in a truncated Fock basis, and phase space
quadrature of symbol integrals.

Operators are dense ``N^n x N^n`` matrices with mode 0 as the most
significant tensor factor. Everything that involves an exponential is
computed in a padded space and projected back to the cutoff, so the
returned matrix elements are those of the untruncated operator. Nothing
here uses the Cayley transform or the trace formulas.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy import integrate, linalg

from . import symplectic_core as sc
from .errors import DimensionError, OracleError, TruncationError
from .gaussian_state import GaussianState, characteristic_value, validate

logger = logging.getLogger("metaphase")

#: largest matrix dimension N^n an operator may have
MAX_DIMENSION = 4096

#: largest padded dimension used for intermediate exponentials
MAX_PADDED_DIMENSION = 4 * MAX_DIMENSION

#: largest weight a density matrix may lose to the cutoff
TRUNCATION_TOL = 1e-6


def _check_size(cutoff: int, n: int, limit: int = MAX_DIMENSION) -> None:
    if cutoff < 2:
        raise TruncationError(f"cutoff must be at least 2 (got {cutoff})", 1.0)
    if n < 1:
        raise DimensionError(f"mode count must be at least 1 (got {n})")
    if cutoff**n > limit:
        raise TruncationError(
            f"{n} modes at cutoff {cutoff} need {cutoff**n} basis states (limit {limit})",
            0.0,
        )


@dataclasses.dataclass(frozen=True)
class FockOperator:
    matrix: np.ndarray
    cutoff: int
    n: int

    def __post_init__(self):
        _check_size(self.cutoff, self.n)
        dim = self.cutoff**self.n
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise DimensionError(f"expected a {dim}x{dim} matrix (got {matrix.shape})")
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.cutoff**self.n

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if (other.cutoff, other.n) != (self.cutoff, self.n):
            raise DimensionError("operators live on different truncated spaces")
        return FockOperator(self.matrix @ other.matrix, self.cutoff, self.n)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.cutoff, self.n)


def default_margin(cutoff: int) -> int:
    return max(10, cutoff // 2)


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)


def _single_mode(cutoff: int, hbar: float) -> typing.Tuple[np.ndarray, np.ndarray]:
    a = annihilation(cutoff)
    x = np.sqrt(hbar / 2) * (a + a.T)
    p = 1j * np.sqrt(hbar / 2) * (a.T - a)
    return x, p


def _embed(op: np.ndarray, mode: int, n: int) -> np.ndarray:
    cutoff = op.shape[0]
    result = np.ones((1, 1))
    for j in range(n):
        result = np.kron(result, op if j == mode else np.eye(cutoff))
    return result


def _quadrature_products(cutoff: int, n: int, hbar: float):
    """
    ``z_j`` and exact truncations of ``z_j z_k``: products within a mode are
    formed one level higher and cut back, so that no matrix element feels
    the cutoff
    """
    x, p = _single_mode(cutoff, hbar)
    xb, pb = _single_mode(cutoff + 1, hbar)
    single = [x, p]
    pair = {
        (0, 0): (xb @ xb)[:cutoff, :cutoff],
        (0, 1): (xb @ pb)[:cutoff, :cutoff],
        (1, 0): (pb @ xb)[:cutoff, :cutoff],
        (1, 1): (pb @ pb)[:cutoff, :cutoff],
    }

    def kind(j):
        return (j % n, j // n)

    z = [_embed(single[kind(j)[1]], kind(j)[0], n) for j in range(2 * n)]

    def product(j, k):
        (mj, qj), (mk, qk) = kind(j), kind(k)
        if mj == mk:
            return _embed(pair[qj, qk], mj, n)
        return z[j] @ z[k]

    return z, product


def _quadratic_matrix(K: np.ndarray, cutoff: int, n: int, hbar: float) -> np.ndarray:
    z, product = _quadrature_products(cutoff, n, hbar)
    H = np.zeros((cutoff**n, cutoff**n), dtype=complex)
    for j in range(2 * n):
        for k in range(2 * n):
            if K[j, k] != 0:
                H += 0.5 * K[j, k] * product(j, k)
    return H


def _linear_matrix(ell: np.ndarray, cutoff: int, n: int, hbar: float) -> np.ndarray:
    z, _ = _quadrature_products(cutoff, n, hbar)
    return sum(ell[j] * z[j] for j in range(2 * n))


def _symmetric_input(K: np.ndarray) -> typing.Tuple[np.ndarray, int]:
    K = np.asarray(K, dtype=float)
    n = sc.mode_count(K)
    if np.max(np.abs(K - K.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(K))):
        raise DimensionError("Hamiltonian matrix must be symmetric")
    return sc.sym(K), n


def quadratic_hamiltonian_fock(K: np.ndarray, hbar: float, cutoff: int) -> FockOperator:
    """``H = 1/2 sum_jk K_jk z_j z_k`` in the Hermite basis"""
    K, n = _symmetric_input(K)
    _check_size(cutoff, n)
    H = _quadratic_matrix(K, cutoff, n, hbar)
    return FockOperator(0.5 * (H + H.conj().T), cutoff, n)


def driven_hamiltonian_fock(K: np.ndarray, force: np.ndarray, hbar: float, cutoff: int) -> FockOperator:
    """``H = 1/2 K z.z + l.z``"""
    K, n = _symmetric_input(K)
    ell = np.asarray(force, dtype=float)
    if ell.shape != (2 * n,):
        raise DimensionError(f"force must have {2 * n} components")
    _check_size(cutoff, n)
    H = _quadratic_matrix(K, cutoff, n, hbar) + _linear_matrix(ell, cutoff, n, hbar)
    return FockOperator(0.5 * (H + H.conj().T), cutoff, n)


def evolve(H: FockOperator, t: float, hbar: float) -> FockOperator:
    """``exp(-i H t / hbar)`` by diagonalization"""
    w, V = np.linalg.eigh(H.matrix)
    U = (V * np.exp(-1j * w * t / hbar)) @ V.conj().T
    return FockOperator(U, H.cutoff, H.n)


def _kept_indices(padded: int, cutoff: int, n: int) -> np.ndarray:
    occupations = np.indices((cutoff,) * n).reshape(n, -1)
    return np.ravel_multi_index(tuple(occupations), (padded,) * n)


def _project(matrix: np.ndarray, padded: int, cutoff: int, n: int) -> np.ndarray:
    if padded == cutoff:
        return matrix
    idx = _kept_indices(padded, cutoff, n)
    return matrix[np.ix_(idx, idx)]


def _padded(cutoff: int, n: int, margin: typing.Optional[int]) -> int:
    padded = cutoff + (default_margin(cutoff) if margin is None else margin)
    _check_size(padded, n, MAX_PADDED_DIMENSION)
    return padded


def _displacement_matrix(z0: np.ndarray, hbar: float, cutoff: int, n: int) -> np.ndarray:
    x0, p0 = z0[:n], z0[n:]
    ell = np.concatenate([p0, -x0])
    G = _linear_matrix(ell, cutoff, n, hbar)
    return linalg.expm(1j * G / hbar)


def displacement_fock(
    z0: np.ndarray, hbar: float, cutoff: int, margin: typing.Optional[int] = None
) -> FockOperator:
    """``T(z0) = exp((i/hbar)(p0.x - x0.p))``"""
    z0 = np.asarray(z0, dtype=float)
    if z0.ndim != 1 or z0.size % 2 or z0.size == 0:
        raise DimensionError(f"z0 must be a phase space vector (got shape {z0.shape})")
    n = z0.size // 2
    _check_size(cutoff, n)
    padded = _padded(cutoff, n, margin)
    T = _displacement_matrix(z0, hbar, padded, n)
    return FockOperator(_project(T, padded, cutoff, n), cutoff, n)


class FockPropagator:
    """
    ``t -> exp(-it(1/2 K z.z + l.z)/hbar)`` for a time independent
    Hamiltonian. The Hamiltonian is diagonalized once in a padded space and
    every propagator is cut back to ``cutoff``.
    """

    def __init__(
        self,
        K: np.ndarray,
        hbar: float,
        cutoff: int,
        force: typing.Optional[np.ndarray] = None,
        margin: typing.Optional[int] = None,
    ):
        K, n = _symmetric_input(K)
        _check_size(cutoff, n)
        padded = _padded(cutoff, n, margin)
        H = _quadratic_matrix(K, padded, n, hbar)
        if force is not None:
            ell = np.asarray(force, dtype=float)
            if ell.shape != (2 * n,):
                raise DimensionError(f"force must have {2 * n} components")
            H = H + _linear_matrix(ell, padded, n, hbar)
        self._energies, self._vectors = np.linalg.eigh(0.5 * (H + H.conj().T))
        self.hbar = hbar
        self.cutoff = cutoff
        self.n = n
        self._padded = padded

    def at(self, t: float) -> FockOperator:
        V = self._vectors
        U = (V * np.exp(-1j * self._energies * t / self.hbar)) @ V.conj().T
        return FockOperator(_project(U, self._padded, self.cutoff, self.n), self.cutoff, self.n)


def _sp_log_hamiltonian(L: np.ndarray) -> np.ndarray:
    """``K`` with ``exp(JK) = exp(L)`` for ``L`` in sp(n)"""
    J = sc.standard_form(sc.mode_count(L))
    return sc.sym(-J @ L)


def _polar_hamiltonians(S: np.ndarray) -> typing.List[np.ndarray]:
    """
    ``S = P O`` with ``P = (S S^T)^1/2`` positive and ``O`` orthogonal, both
    symplectic; returns the quadratic Hamiltonians whose unit-time flows are
    ``P`` and ``O``, in the order they act (``O`` first)
    """
    S = sc.check_symplectic(S, relative=True)
    w, U = np.linalg.eigh(sc.sym(S @ S.T))
    P = (U * np.sqrt(w)) @ U.T
    log_P = (U * (0.5 * np.log(w))) @ U.T
    O = np.linalg.solve(P, S)

    log_O = linalg.logm(O)
    if np.iscomplexobj(log_O):
        if np.max(np.abs(log_O.imag)) > 1e-8 * max(1.0, np.max(np.abs(log_O.real))):
            raise OracleError("orthogonal polar factor has no real logarithm")
        log_O = log_O.real
    return [_sp_log_hamiltonian(log_O), _sp_log_hamiltonian(sc.sym(log_P))]


def _metaplectic_matrix(S: np.ndarray, hbar: float, cutoff: int) -> np.ndarray:
    n = sc.mode_count(S)
    U = np.eye(cutoff**n, dtype=complex)
    for K in _polar_hamiltonians(S):
        H = _quadratic_matrix(K, cutoff, n, hbar)
        U = linalg.expm(-0.5j * (H + H.conj().T) / hbar) @ U
    return U


def symplectic_fock(
    S: np.ndarray, hbar: float, cutoff: int, margin: typing.Optional[int] = None
) -> FockOperator:
    """
    A metaplectic operator over ``S`` (sign unspecified) as the product of
    the exponentials of its two polar factors
    """
    S = np.asarray(S, dtype=float)
    n = sc.mode_count(S)
    _check_size(cutoff, n)
    padded = _padded(cutoff, n, margin)
    U = _metaplectic_matrix(S, hbar, padded)
    return FockOperator(_project(U, padded, cutoff, n), cutoff, n)


def _thermal_diagonal(nbar: np.ndarray, cutoff: int) -> np.ndarray:
    diag = np.ones(1)
    k = np.arange(cutoff)
    for occ in nbar:
        lam = occ / (occ + 1.0)
        diag = np.kron(diag, (1.0 - lam) * lam**k)
    return diag


def gaussian_density_fock(
    state: GaussianState,
    cutoff: int,
    margin: typing.Optional[int] = None,
    tol: float = TRUNCATION_TOL,
) -> FockOperator:
    """
    Density matrix of a Gaussian state: a product of thermal states with the
    symplectic spectrum of ``V``, moved by the metaplectic operator of the
    Williamson transformation and displaced to the mean.

    :raises TruncationError: when more than ``tol`` of the trace lies above
                             the cutoff
    """
    validate(state).raise_if_inadmissible()
    n, hbar = state.n, state.hbar
    _check_size(cutoff, n)
    padded = _padded(cutoff, n, margin)

    form = sc.williamson(state.V)
    nbar = np.maximum(form.omegas / hbar - 0.5, 0.0)
    rho = np.diag(_thermal_diagonal(nbar, padded)).astype(complex)

    S = form.R.T
    if np.max(np.abs(S - np.eye(2 * n))) > 1e-14:
        U = _metaplectic_matrix(S, hbar, padded)
        rho = U @ rho @ U.conj().T
    if not state.is_centered:
        T = _displacement_matrix(state.mean, hbar, padded, n)
        rho = T @ rho @ T.conj().T

    rho = _project(rho, padded, cutoff, n)
    rho = 0.5 * (rho + rho.conj().T)
    weight = float(np.trace(rho).real)
    lost = 1.0 - weight
    if lost > tol:
        raise TruncationError(
            f"cutoff {cutoff} keeps only {weight:.9f} of the state; raise the cutoff",
            lost,
        )
    if lost > 1e-9:
        logger.warning("truncation error %.3e at cutoff %d", lost, cutoff)
    return FockOperator(rho / weight, cutoff, n)


def _matching(U: FockOperator, rho: FockOperator) -> np.ndarray:
    if U.n != rho.n:
        raise DimensionError(f"operator acts on {U.n} modes, state has {rho.n}")
    if rho.cutoff > U.cutoff:
        raise TruncationError(
            f"state cutoff {rho.cutoff} exceeds operator cutoff {U.cutoff}", 0.0
        )
    return _project(U.matrix, U.cutoff, rho.cutoff, U.n)


def trace_oracle(U: FockOperator, rho: FockOperator) -> complex:
    """``Tr(U rho)``; an operator with a larger cutoff is cut down to the state's"""
    Um = _matching(U, rho)
    return complex(np.einsum("ij,ji->", Um, rho.matrix))


def pure_state_overlap(U: FockOperator, rho: FockOperator, purity_tol: float = 1e-6) -> complex:
    """``(U psi | psi)`` for the dominant eigenvector ``psi`` of a pure ``rho``"""
    Um = _matching(U, rho)
    w, V = np.linalg.eigh(rho.matrix)
    if w[-1] < 1.0 - purity_tol:
        raise OracleError(f"state is not pure (largest eigenvalue {w[-1]:.9f})")
    psi = V[:, -1]
    return complex(psi.conj() @ Um @ psi)


class QuadratureResult(typing.NamedTuple):
    value: complex
    #: difference to the same rule on a grid with half the points
    error: float


def _box_integral(f: typing.Callable[[np.ndarray], np.ndarray], dims: int, points: int, half_width: float):
    """Tensor trapezoid rule for ``f`` over ``[-half_width, half_width]^dims``"""
    s = np.linspace(-half_width, half_width, points)
    grids = np.meshgrid(*([s] * dims), indexing="ij")
    values = f(np.stack(grids, axis=-1))
    total = values
    for _ in range(dims):
        total = integrate.trapezoid(total, s, axis=0)
    return complex(total), values


def _richardson(f, dims: int, points: int, half_width: float) -> QuadratureResult:
    if points % 2 == 0:
        points += 1
    fine, values = _box_integral(f, dims, points, half_width)
    coarse, _ = _box_integral(f, dims, (points + 1) // 2, half_width)

    peak = float(np.max(np.abs(values)))
    edge = max(
        float(np.max(np.abs(np.take(values, index, axis=axis))))
        for axis in range(dims)
        for index in (0, -1)
    )
    if peak == 0 or edge > 1e-10 * peak:
        raise OracleError(f"integrand does not decay on the box (edge/peak {edge / max(peak, 1e-300):.3e})")
    return QuadratureResult(fine, abs(fine - coarse))


def _default_points(n: int) -> int:
    return 201 if n == 1 else 31


def quadrature_trace(
    symbol: typing.Callable[[np.ndarray], np.ndarray],
    state: GaussianState,
    points: typing.Optional[int] = None,
    half_width: float = 8.0,
) -> QuadratureResult:
    """
    ``Tr(A rho) = int a(z) rho_sigma(-z) dz`` for a twisted symbol ``a``.

    The grid is laid along the principal axes of the Gaussian envelope
    ``exp(-(1/2hbar^2) V Jz.Jz)`` and spans ``half_width`` standard
    deviations in every direction.
    """
    n, hbar = state.n, state.hbar
    if n > 2:
        raise DimensionError("quadrature is available for one or two modes")
    points = _default_points(n) if points is None else points

    J = sc.standard_form(n)
    Q = sc.sym(J.T @ state.V @ J) / hbar**2
    q, U = np.linalg.eigh(Q)
    scale = U / np.sqrt(q)
    jacobian = float(np.prod(1.0 / np.sqrt(q)))

    def integrand(s):
        z = s @ scale.T
        return symbol(z) * characteristic_value(state, -z) * jacobian

    return _richardson(integrand, 2 * n, points, half_width)


def twisted_convolution_at(a, b, z: np.ndarray, points: int = 161, half_width: float = 8.0) -> QuadratureResult:
    """
    Twisted convolution ``(2 pi hbar)^-n int a(z - u) b(u) e^((i/2hbar) sigma(z, u)) du``
    of two Gaussian twisted symbols at one point.

    The integrand is a complex Gaussian in ``u``; the contour is moved to
    its steepest descent directions, each eigendirection of
    ``M_a + M_b`` being rotated by ``e^(+-i pi/4)``, which turns the
    oscillating integral into a decaying one. The symbols are evaluated at
    the complex points of the rotated contour.
    """
    hbar = a.hbar
    z = np.asarray(z, dtype=float)
    n = z.size // 2
    J = sc.standard_form(n)
    N = sc.sym(a.M + b.M)
    lam, O = np.linalg.eigh(N)
    if np.min(np.abs(lam)) <= 1e-12 * max(1.0, np.max(np.abs(lam))):
        raise OracleError("M_a + M_b is singular; the product is degenerate")

    centre = np.linalg.solve(N, a.M @ z - 0.5 * (J @ z))
    rot = np.exp(0.25j * np.pi * np.sign(lam)) * np.sqrt(hbar / np.abs(lam))
    scale = O * rot
    jacobian = complex(np.prod(rot)) * (2 * np.pi * hbar) ** (-n)

    def integrand(s):
        u = centre + s @ scale.T
        return a(z - u) * b(u) * np.exp(0.5j * sc.sigma(z, u) / hbar) * jacobian

    return _richardson(integrand, 2 * n, points, half_width)
