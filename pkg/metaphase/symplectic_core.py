"""
Linear symplectic algebra on phase space ``z = (x, p)``.

Everything here works on plain ``numpy`` arrays; a symplectic matrix is a
real ``2n x 2n`` array with ``S.T @ J @ S == J`` where ``J`` is the standard
form returned by :func:`standard_form`.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateEndpoint,
    DegenerateProduct,
    DimensionError,
    IndexMismatch,
    NotFree,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
    SingularForm,
)

if typing.TYPE_CHECKING:
    from .isotopy import SympPath


logger = logging.getLogger("metaphase")

#: default bound on ``max|S^T J S - J|``
SYMPLECTIC_TOL = 1e-10

#: relative bound below which ``det(S - I)`` counts as zero
DEGENERACY_TOL = 1e-9

#: symmetry tolerance for matrices that are symmetric in theory
SYMMETRY_TOL = 1e-10


def standard_form(n: int) -> np.ndarray:
    """Returns ``J = [[0, I], [-I, 0]]`` for ``n`` modes"""
    if n < 1:
        raise DimensionError(f"mode count must be at least 1 (got {n})")
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def mode_count(S: np.ndarray) -> int:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    if S.shape[0] == 0 or S.shape[0] % 2:
        raise DimensionError(
            f"phase space matrices must have even dimension (got {S.shape[0]})"
        )
    return S.shape[0] // 2


def sym(A: np.ndarray) -> np.ndarray:
    return (A + A.T) / 2


def sigma(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Symplectic product ``sigma(z, w) = Jz . w = p.x' - p'.x``. Both arguments
    may carry leading batch dimensions.
    """
    z = np.asarray(z)
    w = np.asarray(w)
    n = z.shape[-1] // 2
    x, p = z[..., :n], z[..., n:]
    xw, pw = w[..., :n], w[..., n:]
    return np.sum(p * xw, axis=-1) - np.sum(pw * x, axis=-1)


def is_symplectic(S: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    n = mode_count(S)
    J = standard_form(n)
    return bool(np.max(np.abs(S.T @ J @ S - J)) <= tol)


def check_symplectic(
    S: np.ndarray, tol: float = SYMPLECTIC_TOL, relative: bool = False
) -> np.ndarray:
    """
    Returns ``S`` as a float array, raising :class:`NotSymplectic` if it
    fails the form test. With ``relative`` the tolerance is scaled by
    ``max(1, |S|^2)`` so that strongly squeezing matrices are not rejected
    for ordinary roundoff.
    """
    S = np.asarray(S, dtype=float)
    n = mode_count(S)
    J = standard_form(n)
    defect = np.max(np.abs(S.T @ J @ S - J))
    if relative:
        tol = tol * max(1.0, np.max(np.abs(S)) ** 2)
    if not defect <= tol:
        raise NotSymplectic(f"matrix is not symplectic (|S^T J S - J| = {defect:.3e})")
    return S


def blocks(S: np.ndarray) -> typing.Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Splits ``S`` into ``A, B, C, D`` with ``S = [[A, B], [C, D]]``"""
    n = mode_count(S)
    return S[:n, :n], S[:n, n:], S[n:, :n], S[n:, n:]


def symplectic_inverse(S: np.ndarray) -> np.ndarray:
    """Inverse through the block identity ``S^-1 = [[D^T, -B^T], [-C^T, A^T]]``"""
    S = check_symplectic(S, relative=True)
    A, B, C, D = blocks(S)
    return np.block([[D.T, -B.T], [-C.T, A.T]])


def rotation(theta: float, n: int = 1) -> np.ndarray:
    """Mode-wise rotation ``[[cos I, sin I], [-sin I, cos I]]``"""
    c = np.cos(theta) * np.eye(n)
    s = np.sin(theta) * np.eye(n)
    return np.block([[c, s], [-s, c]])


def det_s_minus_i(S: np.ndarray) -> float:
    S = np.asarray(S, dtype=float)
    return float(np.linalg.det(S - np.eye(S.shape[0])))


def _scale(S: np.ndarray) -> float:
    n = mode_count(S)
    return max(1.0, float(np.linalg.norm(S, 2))) ** n


def is_degenerate(S: np.ndarray, tol: float = DEGENERACY_TOL) -> bool:
    """
    True when ``S`` lies on the degenerate set ``det(S - I) = 0``, up to a
    tolerance taken relative to ``|S|^n``
    """
    return abs(det_s_minus_i(S)) <= tol * _scale(S)


def signature(M: np.ndarray, tol: typing.Optional[float] = None) -> int:
    """Number of positive minus number of negative eigenvalues of ``M``"""
    w = np.linalg.eigvalsh(sym(np.asarray(M, dtype=float)))
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    if np.any(np.abs(w) <= tol):
        raise SingularForm(f"form is singular (smallest |eigenvalue| {np.min(np.abs(w)):.3e})")
    return int(np.sum(w > 0) - np.sum(w < 0))


def inert(x: typing.Union[float, np.ndarray], tol: typing.Optional[float] = None) -> int:
    """
    Index of inertia: for a scalar 0 if ``x > 0`` and 1 if ``x < 0``; for a
    symmetric matrix the number of negative eigenvalues. Zero (or a singular
    matrix) is an error.
    """
    if np.ndim(x) == 0:
        x = float(x)
        if x > 0:
            return 0
        if x < 0:
            return 1
        raise SingularForm("Inert is undefined at zero")

    M = np.atleast_2d(np.asarray(x, dtype=float))
    w = np.linalg.eigvalsh(sym(M))
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    if np.any(np.abs(w) <= tol):
        raise SingularForm(f"Inert is undefined for a singular form")
    return int(np.sum(w < 0))


def cayley(S: np.ndarray, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """
    Symplectic Cayley transform ``M(S) = J/2 + J (S - I)^-1``, equal to
    ``J/2 (S + I)(S - I)^-1``. The result is symmetric.
    """
    S = check_symplectic(S, relative=True)
    n = mode_count(S)
    if is_degenerate(S, tol):
        raise DegenerateEndpoint(
            f"det(S - I) = {det_s_minus_i(S):.3e}: Cayley transform undefined"
        )
    J = standard_form(n)
    M = 0.5 * J + J @ np.linalg.inv(S - np.eye(2 * n))
    return sym(M)


def cayley_sum(S: np.ndarray, S2: np.ndarray, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """
    ``M(S) + M(S2)``; invertible exactly when the product ``S @ S2`` is
    non-degenerate
    """
    M1 = cayley(S, tol)
    M2 = cayley(S2, tol)
    if is_degenerate(S @ S2, tol):
        raise DegenerateProduct(
            f"det(SS' - I) = {det_s_minus_i(S @ S2):.3e}: product is degenerate"
        )
    return sym(M1 + M2)


@dataclasses.dataclass(frozen=True)
class GeneratingFunction:
    """
    Quadratic form ``W(x, x') = 1/2 Px.x - Lx.x' + 1/2 Qx'.x'`` together
    with a Maslov index ``m`` (a choice of ``arg det L / pi`` modulo 4).
    """

    P: np.ndarray
    Q: np.ndarray
    L: np.ndarray
    m: int = 0

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        L = np.atleast_2d(np.asarray(self.L, dtype=float))
        n = L.shape[0]
        for name, mat in (("P", P), ("Q", Q), ("L", L)):
            if mat.shape != (n, n):
                raise DimensionError(f"{name} must be {n}x{n} (got {mat.shape})")
        for name, mat in (("P", P), ("Q", Q)):
            if np.max(np.abs(mat - mat.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(mat))):
                raise NotSymmetric(f"{name} must be symmetric")

        det_L = np.linalg.det(L)
        if det_L == 0 or not np.all(np.isfinite(L)):
            raise NotFree("L must be invertible")
        m = int(self.m) % 4
        if (m % 2 == 0) != (det_L > 0):
            raise IndexMismatch(
                f"Maslov index {m} has the wrong parity for det L = {det_L:.3e}"
            )

        object.__setattr__(self, "P", sym(P))
        object.__setattr__(self, "Q", sym(Q))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def W_xx(self) -> np.ndarray:
        """Hessian of ``x -> W(x, x)``"""
        return self.P - self.L - self.L.T + self.Q

    def inverse(self) -> "GeneratingFunction":
        """Generating function of the inverse matrix, ``W*(x, x') = -W(x', x)``"""
        return GeneratingFunction(P=-self.Q, Q=-self.P, L=-self.L.T, m=self.n - self.m)


def matrix_from_generating_function(W: GeneratingFunction) -> np.ndarray:
    Li = np.linalg.inv(W.L)
    A = Li @ W.Q
    C = W.P @ Li @ W.Q - W.L.T
    D = W.P @ Li
    return np.block([[A, Li], [C, D]])


def is_free(S: np.ndarray, tol: float = DEGENERACY_TOL) -> bool:
    _, B, _, _ = blocks(np.asarray(S, dtype=float))
    return abs(np.linalg.det(B)) > tol * _scale(S)


def generating_function_from_matrix(
    S: np.ndarray, m_choice: typing.Optional[int] = None, tol: float = DEGENERACY_TOL
) -> GeneratingFunction:
    """
    Inverts :func:`matrix_from_generating_function` on a free matrix.

    :param m_choice: Maslov index to attach; it must have the parity of
                     ``det L``. When omitted the smallest admissible value
                     (0 or 1) is used.
    """
    S = check_symplectic(S, relative=True)
    if not is_free(S, tol):
        raise NotFree("upper right block of S is singular; S is not free")

    A, B, C, D = blocks(S)
    L = np.linalg.inv(B)
    Q = L @ A
    P = D @ L
    scale = max(1.0, np.max(np.abs(Q)), np.max(np.abs(P)))
    if max(np.max(np.abs(Q - Q.T)), np.max(np.abs(P - P.T))) > 1e-8 * scale:
        raise NotSymplectic("generating function blocks are not symmetric")

    parity = 0 if np.linalg.det(L) > 0 else 1
    if m_choice is None:
        m = parity
    else:
        m = int(m_choice) % 4
        if m % 2 != parity:
            raise IndexMismatch(f"Maslov index {m_choice} has the wrong parity for S")

    return GeneratingFunction(P=sym(P), Q=sym(Q), L=L, m=m)


@dataclasses.dataclass(frozen=True)
class WilliamsonForm:
    """``K = R^T D R`` with ``D = diag(omegas, omegas)`` and ``R`` symplectic"""

    R: np.ndarray
    omegas: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return np.diag(np.concatenate([self.omegas, self.omegas]))

    def reconstruct(self) -> np.ndarray:
        return sym(self.R.T @ self.D @ self.R)


def _check_spd(K: np.ndarray, name: str = "K") -> np.ndarray:
    K = np.asarray(K, dtype=float)
    mode_count(K)
    if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(K))):
        raise NotSymmetric(f"{name} must be symmetric")
    K = sym(K)
    if np.linalg.eigvalsh(K)[0] <= 0:
        raise NotPositiveDefinite(f"{name} must be positive definite")
    return K


def _group_basis(A: np.ndarray, group: list) -> list:
    """
    Replaces the Schur vectors of a cluster of (nearly) equal frequencies
    by a basis that depends only on the invariant subspace they span: the
    coordinate axes projected onto it and orthonormalised in order, each
    ``q1`` completed by ``q2 = -A q1 / omega``
    """
    omega = float(np.mean([p[0] for p in group]))
    span = np.column_stack([p[1] for p in group] + [p[2] for p in group])
    P = span @ span.T

    chosen: typing.List[np.ndarray] = []
    result = []
    for e in np.eye(A.shape[0]):
        if len(result) == len(group):
            break
        v = P @ e
        for q in chosen:
            v = v - (q @ v) * q
        norm = np.linalg.norm(v)
        if norm < 1e-6:
            continue
        q1 = v / norm
        q2 = -A @ q1 / omega
        q2 = q2 / np.linalg.norm(q2)
        chosen.extend((q1, q2))
        result.append((omega, q1, q2))
    return result


def williamson(K: np.ndarray, group_tol: float = 1e-8) -> WilliamsonForm:
    """
    Williamson normal form of a positive definite quadratic form.

    ``K^(1/2) J K^(1/2)`` is antisymmetric with eigenvalues ``+-i omega_j``;
    its real Schur form is block diagonal, and the Schur vectors, ordered so
    that every block reads ``[[0, omega], [-omega, 0]]``, give an orthogonal
    ``O`` with ``O^T K^(1/2) J K^(1/2) O = J D``. Then
    ``R^-1 = K^(-1/2) O D^(1/2)`` is symplectic and ``K = R^T D R``.

    Frequencies closer than ``group_tol`` are treated as one eigenvalue
    and share a basis chosen by :func:`_group_basis`, so that ``R`` does
    not depend on how the Schur solver split the cluster.
    """
    K = _check_spd(K)
    n = mode_count(K)
    J = standard_form(n)

    w, U = np.linalg.eigh(K)
    K_half = (U * np.sqrt(w)) @ U.T
    K_mhalf = (U / np.sqrt(w)) @ U.T

    A = K_half @ J @ K_half
    A = (A - A.T) / 2
    T, Z = linalg.schur(A, output="real")

    pairs = []
    i = 0
    while i < 2 * n:
        a = T[i, i + 1]
        q1, q2 = Z[:, i], Z[:, i + 1]
        if a < 0:
            q1, q2 = q2, q1
        omega = (abs(T[i, i + 1]) + abs(T[i + 1, i])) / 2
        pairs.append((omega, q1, q2))
        i += 2

    pairs.sort(key=lambda item: item[0])
    groups: typing.List[list] = []
    for pair in pairs:
        if groups and pair[0] - groups[-1][-1][0] < group_tol * max(1.0, pair[0]):
            groups[-1].append(pair)
        else:
            groups.append([pair])

    pairs = []
    for group in groups:
        if len(group) == 1:
            pairs.extend(group)
        else:
            logger.debug(
                "near-degenerate symplectic eigenvalues %r", [p[0] for p in group]
            )
            pairs.extend(_group_basis(A, group))

    omegas = np.array([p[0] for p in pairs])
    O = np.column_stack([p[1] for p in pairs] + [p[2] for p in pairs])
    d_half = np.sqrt(np.concatenate([omegas, omegas]))
    R_inv = K_mhalf @ O * d_half
    R = symplectic_inverse(R_inv)
    return WilliamsonForm(R=R, omegas=omegas)


def hamiltonian_matrix(S: np.ndarray, S_dot: np.ndarray) -> np.ndarray:
    """``K = sym(-J S' S^-1)``; the flow satisfies ``S' = J K S``"""
    n = mode_count(S)
    J = standard_form(n)
    return sym(-J @ S_dot @ symplectic_inverse(S))


def hamiltonian_blocks(S: np.ndarray, S_dot: np.ndarray) -> np.ndarray:
    """The same matrix as :func:`hamiltonian_matrix`, assembled block by block"""
    A, B, C, D = blocks(S)
    Ad, Bd, Cd, Dd = blocks(S_dot)
    K_xx = Dd @ C.T - Cd @ D.T
    K_xp = Cd @ B.T - Dd @ A.T
    K_px = Ad @ D.T - Bd @ C.T
    K_pp = Bd @ A.T - Ad @ B.T
    return sym(np.block([[K_xx, K_xp], [K_px, K_pp]]))


class HamiltonianSample(typing.NamedTuple):
    #: symmetric matrix of ``H(z, t) = 1/2 K z.z``
    K: np.ndarray
    #: True when the derivative came from a one-sided difference
    one_sided: bool


def hamiltonian_from_path(path: "SympPath", t: float) -> HamiltonianSample:
    S = path.at(t)
    S_dot, one_sided = path.derivative(t)
    return HamiltonianSample(hamiltonian_matrix(S, S_dot), one_sided)


def symplectic_projection(S: np.ndarray) -> np.ndarray:
    """
    First order pull back onto Sp(n): with ``N = -J S^T J S`` (the identity
    for exact ``S``) returns ``S (3I - N) / 2``
    """
    n = mode_count(S)
    J = standard_form(n)
    N = -J @ S.T @ J @ S
    return S @ (1.5 * np.eye(2 * n) - 0.5 * N)


def random_symplectic(
    n: int, rng: np.random.Generator, scale: float = 0.5
) -> np.ndarray:
    """
    Random element of Sp(n): the exponential of a random Hamiltonian matrix
    times a random symplectic rotation built from a unitary ``U`` as
    ``[[Re U, -Im U], [Im U, Re U]]``
    """
    J = standard_form(n)
    G = rng.normal(size=(2 * n, 2 * n))
    X = J @ sym(G) * scale

    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    U, _ = np.linalg.qr(Z)
    O = np.block([[U.real, -U.imag], [U.imag, U.real]])
    return linalg.expm(X) @ O
