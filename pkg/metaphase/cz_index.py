"""
Conley-Zehnder index of symplectic isotopies.

The full integer comes from signed crossing counting along the path; the
closed harmonic formula, the generating-function formula (mod 4), the
determinant sign (mod 2) and the product formula give independent checks.
"""

import dataclasses
import enum
import logging
import math
import typing

import numpy as np
from scipy import optimize

from . import symplectic_core as sc
from .errors import DegenerateEndpoint, DegenerateTime, NotFree, SingularForm, UnresolvedCrossing
from .isotopy import SympPath

logger = logging.getLogger("metaphase")

#: converts the raw crossing count into the convention of the harmonic table
#: (nu = -1 on the first half period of a positive frequency oscillator)
CZ_SIGN = -1
CZ_OFFSET = 0

#: width of the bracket refinement for zeros of det(S_t - I)
ZERO_XTOL = 1e-12

#: relative bound on the smallest singular value at an accepted touching zero;
#: minimising its square locates the zero to about sqrt(eps)
ZERO_TOL = 1e-6

#: zeros closer than this (relative to max(1, T)) are one zero
ZERO_MERGE = 1e-7

#: largest flow angle covered by one step of the zero scan
SCAN_RESOLUTION = math.pi / 8

#: cap on scan steps per grid interval
MAX_SCAN_STEPS = 4096

#: relative threshold for singular values spanning the kernel at a crossing
KERNEL_TOL = 1e-6

#: singular values within this factor of the smallest one also span the kernel
KERNEL_GAP = 1e3

#: relative time offset used to re-examine degenerate crossing forms
PERTURBATION = 1e-7


class CZRoute(enum.Enum):
    CROSSING = "crossing"
    CLOSED_FORM = "closed_form"
    MOD4_FREE = "mod4_free"
    MOD2_ARGDET = "mod2_argdet"
    PRODUCT = "product"


class Crossing(typing.NamedTuple):
    time: float
    kernel_dim: int
    signature: int


@dataclasses.dataclass(frozen=True)
class CZResult:
    nu_mod2: int
    route: CZRoute
    nu_mod4: typing.Optional[int] = None
    nu: typing.Optional[int] = None
    crossings: typing.Tuple[Crossing, ...] = ()

    def __post_init__(self):
        if self.nu is not None:
            if self.nu_mod4 != self.nu % 4 or self.nu_mod2 != self.nu % 2:
                raise ValueError(f"inconsistent index data: {self}")
        if self.nu_mod4 is not None and self.nu_mod4 % 2 != self.nu_mod2:
            raise ValueError(f"inconsistent index data: {self}")

    @classmethod
    def from_integer(
        cls, nu: int, route: CZRoute, crossings: typing.Sequence[Crossing] = ()
    ) -> "CZResult":
        return cls(nu_mod2=nu % 2, route=route, nu_mod4=nu % 4, nu=nu, crossings=tuple(crossings))


def _kernel(A: np.ndarray, scale: float) -> np.ndarray:
    _, sv, Vh = np.linalg.svd(A)
    mask = sv <= max(KERNEL_TOL * scale, KERNEL_GAP * sv[-1])
    if not np.any(mask):
        mask[-1] = True
    return Vh[mask].T


def _smallest_singular_value(A: np.ndarray) -> float:
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def _scan_times(path: SympPath) -> np.ndarray:
    """
    The path grid, subdivided so that no scan step advances the flow by
    more than ``SCAN_RESOLUTION`` radians (judged by ``|K|`` at both ends
    of each interval)
    """
    times = path.times
    rates = [float(np.linalg.norm(path.hamiltonian(t).K, 2)) for t in times]
    pieces = []
    for i, (t0, t1) in enumerate(zip(times[:-1], times[1:])):
        rate = max(rates[i], rates[i + 1])
        steps = min(MAX_SCAN_STEPS, max(1, math.ceil((t1 - t0) * rate / SCAN_RESOLUTION)))
        pieces.append(np.linspace(t0, t1, steps + 1)[:-1])
    return np.concatenate(pieces + [times[-1:]])


def _find_zeros(
    path: SympPath,
    det_fn: typing.Callable[[float], float],
    smin_fn: typing.Callable[[float], float],
) -> typing.List[float]:
    """
    Times in ``(0, T)`` where a determinant vanishes, from a scan of
    :func:`_scan_times`. Sign changes are refined with Brent's method.
    Zeros touched without a sign change sit in valleys of the smallest
    singular value; the square of that value is smooth there and is
    minimised instead.
    """
    times = _scan_times(path)
    T = float(times[-1])
    d = np.array([det_fn(t) for t in times])
    s = np.array([smin_fn(t) for t in times])
    last = len(times) - 1
    window = ZERO_MERGE * max(1.0, T)

    zeros = []
    claimed = set()
    for i in range(1, last):
        if d[i] == 0.0:
            zeros.append(float(times[i]))
            claimed.update((i - 1, i, i + 1))
    for i in range(last):
        if d[i] * d[i + 1] < 0:
            try:
                root = optimize.brentq(det_fn, times[i], times[i + 1], xtol=ZERO_XTOL)
            except (ValueError, RuntimeError) as e:
                raise UnresolvedCrossing(
                    f"could not refine sign change in [{times[i]}, {times[i + 1]}]"
                ) from e
            zeros.append(float(root))
            claimed.update((i, i + 1))

    # the zero at t = 0 is not a crossing; past the end counts as rising
    left = np.concatenate([[np.inf], s[:-1]])
    left[1] = np.inf
    right = np.concatenate([s[1:], [np.inf]])
    for i in range(1, last + 1):
        if i in claimed or not (s[i] < left[i] and s[i] <= right[i]):
            continue
        lo = times[i - 1] if i > 1 else 0.5 * times[1]
        hi = times[min(i + 1, last)]
        res = optimize.minimize_scalar(
            lambda t: smin_fn(t) ** 2,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": ZERO_XTOL},
        )
        t_min = float(res.x)
        smallest = smin_fn(t_min)
        scale = max(1.0, float(np.linalg.norm(path.at(t_min), 2)))
        if smallest > ZERO_TOL * scale or T - t_min <= window:
            continue
        # near t = 0 the singular value only grows; a true zero lies well below it
        if i == 1 and not smallest < 0.5 * smin_fn(lo):
            continue
        logger.debug("touching zero at t=%r (smallest singular value %.3e)", t_min, smallest)
        zeros.append(t_min)

    zeros.sort()
    merged: typing.List[float] = []
    for t in zeros:
        if merged and abs(t - merged[-1]) <= window:
            continue
        merged.append(t)
    return merged


def _form_signature(
    path: SympPath,
    t: float,
    form: typing.Callable[[float], np.ndarray],
    what: str,
) -> int:
    """
    Signature of ``form(t)``; a singular form is re-evaluated a little
    before and after ``t`` and accepted only when both sides agree.
    """
    G = sc.sym(form(t))
    try:
        return sc.signature(G, tol=1e-9 * max(1.0, float(np.max(np.abs(G)))))
    except SingularForm:
        pass

    delta = PERTURBATION * path.duration
    sides = []
    for tp in (t - delta, t + delta):
        Gp = sc.sym(form(tp))
        try:
            sides.append(sc.signature(Gp, tol=1e-12 * max(1.0, float(np.max(np.abs(Gp))))))
        except SingularForm:
            sides.append(None)
    if sides[0] is None or sides[0] != sides[1]:
        raise UnresolvedCrossing(f"degenerate {what} crossing form at t={t!r}")
    logger.warning(
        "degenerate %s crossing form at t=%r resolved by perturbation (signature %d)",
        what,
        t,
        sides[0],
    )
    return sides[0]


def _crossings(path: SympPath) -> typing.List[Crossing]:
    I = np.eye(2 * path.n)

    def det_fn(t):
        return float(np.linalg.det(path.at(t) - I))

    def smin_fn(t):
        return _smallest_singular_value(path.at(t) - I)

    crossings = []
    for t in _find_zeros(path, det_fn, smin_fn):
        S = path.at(t)
        V = _kernel(S - I, max(1.0, float(np.linalg.norm(S, 2))))
        sig = _form_signature(path, t, lambda tt: V.T @ path.hamiltonian(tt).K @ V, "CZ")
        if sig == 0:
            logger.warning("crossing at t=%r has zero signature", t)
        logger.debug("crossing at t=%r: kernel dim %d, signature %d", t, V.shape[1], sig)
        crossings.append(Crossing(t, V.shape[1], sig))
    return crossings


def _initial_half(path: SympPath) -> int:
    K0 = path.hamiltonian(0.0).K
    try:
        sig = sc.signature(K0, tol=1e-9 * max(1.0, float(np.max(np.abs(K0)))))
    except SingularForm:
        raise UnresolvedCrossing("Hamiltonian at t=0 is degenerate") from None
    return sig // 2


def _nu_from_raw(raw: int) -> int:
    return CZ_SIGN * raw + CZ_OFFSET


def cz_track(
    path: SympPath,
    times: typing.Optional[typing.Sequence[float]] = None,
    tol: float = sc.DEGENERACY_TOL,
) -> typing.List[typing.Optional[int]]:
    """
    Index of every prefix of ``path`` ending at ``times`` (the path grid by
    default), from a single crossing scan. Samples that are degenerate to
    within ``tol`` give None.
    """
    if times is None:
        times = path.times
    half = _initial_half(path)
    crossings = _crossings(path)

    result: typing.List[typing.Optional[int]] = []
    for t in times:
        if t == 0 or sc.is_degenerate(path.at(t), tol):
            result.append(None)
            continue
        raw = half + sum(c.signature for c in crossings if c.time < t)
        result.append(_nu_from_raw(raw))
    return result


def cz_crossing(path: SympPath) -> CZResult:
    if sc.is_degenerate(path.endpoint):
        raise DegenerateEndpoint(
            f"det(S - I) = {sc.det_s_minus_i(path.endpoint):.3e} at the endpoint"
        )
    half = _initial_half(path)
    crossings = _crossings(path)
    nu = _nu_from_raw(half + sum(c.signature for c in crossings))
    return CZResult.from_integer(nu, CZRoute.CROSSING, crossings)


def cz_harmonic_closed(omega: float, t: float) -> CZResult:
    """``nu = -([wt/pi] + Inert(-tan(wt/2)))``"""
    if not omega > 0:
        raise ValueError(f"omega must be positive (got {omega})")
    x = omega * t
    k = x / math.pi
    if abs(k - round(k)) <= 1e-12 * max(1.0, abs(k)):
        raise DegenerateTime(f"omega*t = {x!r} is a multiple of pi")
    nu = -(math.floor(k) + sc.inert(-math.tan(x / 2)))
    return CZResult.from_integer(nu, CZRoute.CLOSED_FORM)


def cz_mod4_free(W: sc.GeneratingFunction) -> int:
    """``m - Inert(W_xx) mod 4`` for a free non-degenerate matrix"""
    S = sc.matrix_from_generating_function(W)
    if sc.is_degenerate(S):
        raise DegenerateEndpoint("matrix generated by W is degenerate")
    return (W.m - sc.inert(W.W_xx)) % 4


def cz_mod2_argdet(S: np.ndarray, tol: float = sc.DEGENERACY_TOL) -> int:
    """``n + [det(S - I) < 0] mod 2``"""
    S = sc.check_symplectic(S, relative=True)
    if sc.is_degenerate(S, tol):
        raise DegenerateEndpoint(f"det(S - I) = {sc.det_s_minus_i(S):.3e}")
    n = sc.mode_count(S)
    return (n + (0 if sc.det_s_minus_i(S) > 0 else 1)) % 2


def cz_product(nu1: int, S1: np.ndarray, nu2: int, S2: np.ndarray) -> int:
    """``nu1 + nu2 + 1/2 sign(M(S1) + M(S2))``"""
    M = sc.cayley_sum(S1, S2)
    return int(nu1) + int(nu2) + sc.signature(M) // 2


@dataclasses.dataclass(frozen=True)
class MaslovTrack:
    """Integer step function ``m(t)``: ``initial`` plus the jumps before ``t``"""

    initial: int
    jumps: typing.Tuple[typing.Tuple[float, int], ...] = ()

    def __call__(self, t: float) -> int:
        for tj, _ in self.jumps:
            if abs(t - tj) <= 1e-12 * max(1.0, abs(tj)):
                raise NotFree(f"S_t is not free at t={t!r}")
        return self.initial + sum(step for tj, step in self.jumps if tj < t)

    def values(self, times: typing.Sequence[float]) -> typing.List[int]:
        return [self(t) for t in times]


def maslov_track(path: SympPath) -> MaslovTrack:
    """
    Maslov index of the free factors along a path. It starts at
    ``Inert K_pp(0)`` and changes at each zero of ``det B_t`` by minus the
    signature of ``(D v).K_pp (D v)`` on ``ker B_t``.
    """
    n = path.n
    K0 = path.hamiltonian(0.0).K
    K_pp0 = K0[n:, n:]
    try:
        initial = sc.inert(K_pp0, tol=1e-9 * max(1.0, float(np.max(np.abs(K0)))))
    except SingularForm:
        raise NotFree("the path does not leave the non-free set at t=0") from None

    def B(t):
        return sc.blocks(path.at(t))[1]

    def det_fn(t):
        return float(np.linalg.det(B(t)))

    def smin_fn(t):
        return _smallest_singular_value(B(t))

    jumps = []
    for t in _find_zeros(path, det_fn, smin_fn):
        S = path.at(t)
        _, B_t, _, D_t = sc.blocks(S)
        V = _kernel(B_t, max(1.0, float(np.linalg.norm(S, 2))))
        W = D_t @ V

        def form(tt, W=W):
            return W.T @ path.hamiltonian(tt).K[n:, n:] @ W

        sig = _form_signature(path, t, form, "Maslov")
        jumps.append((t, -sig))
    return MaslovTrack(initial, tuple(jumps))
