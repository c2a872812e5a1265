"""
Metaplectic operators as ``(S, nu mod 4)`` pairs, their twisted Weyl
symbols, and the Heisenberg-Weyl displacement algebra.

The twisted symbol of the operator labelled ``(S, nu)`` is

    s(z) = i^nu |det(S - I)|^-1/2 exp((i/2hbar) M(S)z.z)

and a displaced element ``e^(i phase/hbar) T(z0) A`` has the symbol
``e^(i phase/hbar) a(z - z0) exp(-(i/2hbar) sigma(z, z0))``.
"""

import dataclasses
import logging
import math
import typing

import numpy as np

from . import symplectic_core as sc
from .cz_index import cz_crossing, cz_mod2_argdet
from .errors import DegenerateEndpoint, DimensionError, IndexMismatch, SearchFailed
from .isotopy import SympPath

logger = logging.getLogger("metaphase")

#: rotation angles pi/k tried by free_factorization
FACTORIZATION_LADDER = range(3, 64)


@dataclasses.dataclass(frozen=True)
class MetaplecticElement:
    S: np.ndarray
    nu: int

    def __post_init__(self):
        S = sc.check_symplectic(self.S, relative=True).copy()
        S.flags.writeable = False
        nu = int(self.nu) % 4
        if not sc.is_degenerate(S) and nu % 2 != cz_mod2_argdet(S):
            raise IndexMismatch(
                f"index {self.nu} has the wrong parity for det(S - I) = {sc.det_s_minus_i(S):.3e}"
            )
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "nu", nu)

    @classmethod
    def from_path(cls, path: SympPath) -> "MetaplecticElement":
        """Endpoint of ``path`` labelled by its Conley-Zehnder index"""
        return cls(path.endpoint, cz_crossing(path).nu)

    @property
    def n(self) -> int:
        return self.S.shape[0] // 2

    def inverse(self) -> "MetaplecticElement":
        return MetaplecticElement(sc.symplectic_inverse(self.S), -self.nu)


@dataclasses.dataclass(frozen=True)
class TwistedGaussianSymbol:
    prefactor: complex
    M: np.ndarray
    hbar: float = 1.0

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Symbol at ``z``; complex points and leading batch axes are accepted"""
        z = np.asarray(z)
        quad = np.einsum("...i,ij,...j->...", z, self.M, z)
        return self.prefactor * np.exp(0.5j * quad / self.hbar)


def _i_power(nu: int) -> complex:
    return (1, 1j, -1, -1j)[nu % 4]


def twisted_symbol(elem: MetaplecticElement, hbar: float = 1.0) -> TwistedGaussianSymbol:
    M = sc.cayley(elem.S)
    prefactor = _i_power(elem.nu) / math.sqrt(abs(sc.det_s_minus_i(elem.S)))
    return TwistedGaussianSymbol(prefactor=complex(prefactor), M=M, hbar=hbar)


def compose(a: MetaplecticElement, b: MetaplecticElement) -> MetaplecticElement:
    """
    Product of two metaplectic operators. The index of the product is
    ``nu_a + nu_b + 1/2 sign(M(S_a) + M(S_b))``; all three matrices must be
    off the degenerate set.
    """
    if a.n != b.n:
        raise DimensionError(f"cannot compose {a.n}-mode and {b.n}-mode elements")
    M = sc.cayley_sum(a.S, b.S)
    nu = a.nu + b.nu + sc.signature(M) // 2
    return MetaplecticElement(a.S @ b.S, nu)


class FreeFactorization(typing.NamedTuple):
    first: sc.GeneratingFunction
    second: sc.GeneratingFunction
    #: rotation angle of the second factor
    theta: float


def _factor_index(
    S: np.ndarray, S_W: np.ndarray, second: np.ndarray, nu_second: int, nu: typing.Optional[int]
) -> typing.Optional[int]:
    """Index of the first factor forced by the reference index of ``S``"""
    if nu is None:
        return None
    if sc.is_degenerate(S):
        logger.debug("reference index ignored: the factorized matrix is degenerate")
        return None
    M = sc.cayley_sum(S_W, second)
    return nu - nu_second - sc.signature(M) // 2


def free_factorization(S: np.ndarray, nu: typing.Optional[int] = None) -> FreeFactorization:
    """
    Writes ``S = S_W S_W'`` with both factors free and non-degenerate.

    ``S_W'`` is the mode-wise rotation by ``theta = pi/k`` for the first
    ``k = 3, 4, ...`` that works and ``S_W = S Rot(-theta)``. The rotation
    carries Maslov index 0 (its index is ``-n``). When a reference index
    ``nu`` of ``S`` is given, the Maslov index of the first factor is chosen
    so that the product rule reproduces ``nu``; otherwise the smallest value
    with the right parity is used.
    """
    S = sc.check_symplectic(S, relative=True)
    n = sc.mode_count(S)

    for k in FACTORIZATION_LADDER:
        theta = math.pi / k
        second = sc.rotation(theta, n)
        S_W = S @ sc.rotation(-theta, n)
        if not (sc.is_free(S_W) and not sc.is_degenerate(S_W)):
            continue

        nu_second = -n
        W2 = sc.generating_function_from_matrix(second, m_choice=0)
        if (W2.m - sc.inert(W2.W_xx)) % 4 != nu_second % 4:
            raise IndexMismatch("rotation factor index does not match its Maslov index")

        nu_first = _factor_index(S, S_W, second, nu_second, nu)
        if nu_first is None:
            W1 = sc.generating_function_from_matrix(S_W)
        else:
            W_plain = sc.generating_function_from_matrix(S_W)
            m = (nu_first + sc.inert(W_plain.W_xx)) % 4
            W1 = sc.generating_function_from_matrix(S_W, m_choice=m)

        logger.debug("free factorization found at theta = pi/%d", k)
        return FreeFactorization(W1, W2, theta)

    raise SearchFailed("no rotation angle gave a free, non-degenerate factorization")


@dataclasses.dataclass(frozen=True)
class DisplacementElement:
    """The operator ``e^(i phase/hbar) T(z0)``"""

    z0: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        z0 = np.array(self.z0, dtype=float)
        if z0.ndim != 1 or z0.size % 2:
            raise DimensionError(f"z0 must be a phase space vector (got shape {z0.shape})")
        z0.flags.writeable = False
        object.__setattr__(self, "z0", z0)
        object.__setattr__(self, "phase", float(self.phase))

    def inverse(self) -> "DisplacementElement":
        return DisplacementElement(-self.z0, -self.phase)


def displacement_compose(a: DisplacementElement, b: DisplacementElement) -> DisplacementElement:
    """``T(z0) T(z1) = e^((i/2hbar) sigma(z0, z1)) T(z0 + z1)``"""
    if a.z0.shape != b.z0.shape:
        raise DimensionError("displacements act on different phase spaces")
    phase = a.phase + b.phase + 0.5 * float(sc.sigma(a.z0, b.z0))
    return DisplacementElement(a.z0 + b.z0, phase)


def displaced_twisted_symbol(
    d: DisplacementElement, elem: MetaplecticElement, hbar: float = 1.0
) -> typing.Callable[[np.ndarray], np.ndarray]:
    if d.z0.shape != (2 * elem.n,):
        raise DimensionError(f"z0 must have {2 * elem.n} components")
    if sc.is_degenerate(elem.S):
        raise DegenerateEndpoint(f"det(S - I) = {sc.det_s_minus_i(elem.S):.3e}")
    s = twisted_symbol(elem, hbar)
    z0 = d.z0
    overall = np.exp(1j * d.phase / hbar)

    def symbol(z):
        z = np.asarray(z)
        return overall * s(z - z0) * np.exp(-0.5j * sc.sigma(z, z0) / hbar)

    return symbol
