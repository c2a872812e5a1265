"""
Closed-form traces ``Tr(U_t rho)`` of metaplectic (and inhomogeneous
metaplectic) operators against Gaussian states, and the phase
``phi(t) = Arg Tr(U_t rho)`` along an isotopy.
"""

import dataclasses
import logging
import math
import typing

import numpy as np
from scipy import integrate

from . import symplectic_core as sc
from .cz_index import cz_harmonic_closed, cz_track
from .errors import DegenerateEndpoint, DimensionError, NotCentered, NotPositiveDefinite
from .gaussian_state import GaussianState, transform, validate
from .isotopy import AffinePath, SympPath
from .utils import parallel_map

logger = logging.getLogger("metaphase")

#: traces smaller than this have no meaningful argument
TRACE_FLOOR = 1e-12


def fresnel_det_invsqrt(A: np.ndarray) -> complex:
    """
    ``det(A)^-1/2`` for a complex symmetric ``A`` with positive definite real
    part, as the product over the eigenvalues ``alpha`` of ``A`` of the
    square roots of ``1/alpha`` with positive real part
    """
    A = np.asarray(A, dtype=complex)
    sc.mode_count(A)
    if np.linalg.eigvalsh(sc.sym(A.real))[0] <= 0:
        raise NotPositiveDefinite("real part of the Fresnel matrix must be positive definite")
    alphas = np.linalg.eigvals(A)
    return complex(np.prod(np.sqrt(1.0 / alphas)))


def _i_power(nu: int) -> complex:
    return (1, 1j, -1, -1j)[nu % 4]


def _checked_state(state: GaussianState, n: int) -> None:
    if state.n != n:
        raise DimensionError(f"state has {state.n} modes, the operator acts on {n}")
    validate(state).raise_if_inadmissible()


def _gaussian_core(S: np.ndarray, nu: int, state: GaussianState) -> typing.Tuple[complex, np.ndarray, np.ndarray]:
    """Returns ``i^nu |det(S - I)|^-1/2 det^-1/2(X)`` with ``X`` and ``M(S)``"""
    S = sc.check_symplectic(S, relative=True)
    n = sc.mode_count(S)
    _checked_state(state, n)
    if sc.is_degenerate(S):
        raise DegenerateEndpoint(
            f"det(S - I) = {sc.det_s_minus_i(S):.3e}: the trace formula does not apply"
        )
    J = sc.standard_form(n)
    M = sc.cayley(S)
    X = state.V / state.hbar + 1j * (J @ M @ J)
    prefactor = _i_power(nu) / math.sqrt(abs(sc.det_s_minus_i(S)))
    return prefactor * fresnel_det_invsqrt(X), X, M


def trace_gaussian(S: np.ndarray, nu: int, state: GaussianState) -> complex:
    """
    ``Tr(S rho) = i^nu |det(S - I)|^-1/2 det^-1/2(F^-1/2 + i M(S^T))`` for a
    centred Gaussian state, with ``M(S^T) = J M(S) J``
    """
    if not state.is_centered:
        raise NotCentered("state has a non-zero mean; use trace_inhomogeneous")
    value, _, _ = _gaussian_core(S, nu, state)
    return value


def trace_inhomogeneous(
    S: np.ndarray, nu: int, z_t: np.ndarray, gamma_t: float, state: GaussianState
) -> complex:
    """
    ``Tr(e^(i gamma/hbar) T(z_t) S rho)`` for a Gaussian state with any mean.

    The symbol integral is Gaussian in ``z`` with matrix
    ``A = J^T X J`` and linear term ``b = -i M z_t + (i/2) J z_t - i J zbar``;
    completing the square gives

        trace = e^(i gamma/hbar) Tr_0 exp((i/2hbar) M z_t.z_t + (1/2hbar) A^-1 b.b)

    where ``Tr_0`` is the homogeneous trace. All extra factors are exactly 1
    when ``z_t``, ``zbar`` and ``gamma`` vanish.
    """
    base, X, M = _gaussian_core(S, nu, state)
    n = state.n
    z_t = np.asarray(z_t, dtype=float)
    if z_t.shape != (2 * n,):
        raise DimensionError(f"z_t must have {2 * n} components (got {z_t.shape})")

    J = sc.standard_form(n)
    hbar = state.hbar
    b = -1j * (M @ z_t) + 0.5j * (J @ z_t) - 1j * (J @ state.mean)
    A = J.T @ X @ J
    exponent = 0.5j * (z_t @ M @ z_t) / hbar + 0.5 * (b @ np.linalg.solve(A, b)) / hbar
    return base * np.exp(1j * float(gamma_t) / hbar) * np.exp(exponent)


def trace_generalized(
    omegas: typing.Sequence[float], R: typing.Optional[np.ndarray], t: float, state: GaussianState
) -> complex:
    """
    Trace along the flow of ``H = 1/2 R^T D R z.z``. The path is the
    conjugate ``R^-1 Rot(t) R`` of independent rotations, so the state is
    moved by ``R`` and the trace is taken against ``Rot(t)`` with the sum
    of the per-mode closed-form indices.
    """
    omegas = np.asarray(omegas, dtype=float)
    n = len(omegas)
    R = np.eye(2 * n) if R is None else sc.check_symplectic(R, relative=True)
    if R.shape != (2 * n, 2 * n):
        raise DimensionError(f"R must be {2 * n}x{2 * n} for {n} modes")

    nu = sum(cz_harmonic_closed(w, t).nu for w in omegas)
    c = np.diag(np.cos(omegas * t))
    s = np.diag(np.sin(omegas * t))
    rotation = np.block([[c, s], [-s, c]])
    moved = transform(R, None, state)
    if moved.is_centered:
        return trace_gaussian(rotation, nu, moved)
    return trace_inhomogeneous(rotation, nu, np.zeros(2 * n), 0.0, moved)


@dataclasses.dataclass(frozen=True)
class PhaseRecord:
    t: float
    det_s_minus_i: float
    degenerate: bool
    trace: typing.Optional[complex] = None
    #: Arg(trace) in (-pi, pi]
    phase_principal: typing.Optional[float] = None
    phase_unwrapped: typing.Optional[float] = None
    nu_mod4: typing.Optional[int] = None
    nu: typing.Optional[int] = None


def _principal(trace: complex) -> typing.Optional[float]:
    if abs(trace) <= TRACE_FLOOR:
        return None
    phase = float(np.angle(trace))
    if phase <= -math.pi:
        phase += 2 * math.pi
    return phase


def _unwrap(records: typing.List[PhaseRecord]) -> typing.List[PhaseRecord]:
    """Continuous phase across the records that have one; others pass through"""
    result = []
    previous = None
    for rec in records:
        if rec.phase_principal is None:
            result.append(rec)
            continue
        if previous is None:
            unwrapped = rec.phase_principal
        else:
            step = rec.phase_principal - previous.phase_principal
            step -= 2 * math.pi * round(step / (2 * math.pi))
            unwrapped = previous.phase_unwrapped + step
        rec = dataclasses.replace(rec, phase_unwrapped=unwrapped)
        result.append(rec)
        previous = rec
    return result


def _sample_times(path: SympPath, grid) -> np.ndarray:
    if grid is None:
        return path.times
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise DimensionError("grid must be a non-empty vector of times")
    return times


def _records(
    times: np.ndarray,
    matrices: typing.Sequence[np.ndarray],
    nus: typing.Sequence[typing.Optional[int]],
    trace_fn: typing.Callable[[int, np.ndarray, int], complex],
) -> typing.List[PhaseRecord]:
    def one(i: int) -> PhaseRecord:
        S = matrices[i]
        det = sc.det_s_minus_i(S)
        nu = nus[i]
        if nu is None or sc.is_degenerate(S):
            return PhaseRecord(t=float(times[i]), det_s_minus_i=det, degenerate=True)
        trace = trace_fn(i, S, nu)
        return PhaseRecord(
            t=float(times[i]),
            det_s_minus_i=det,
            degenerate=False,
            trace=trace,
            phase_principal=_principal(trace),
            nu_mod4=nu % 4,
            nu=nu,
        )

    records = parallel_map(one, range(len(times)))
    degenerate = sum(r.degenerate for r in records)
    if degenerate:
        logger.info("%d of %d samples lie on the degenerate set", degenerate, len(records))
    return _unwrap(records)


def phase_series(
    path: SympPath, state: GaussianState, grid: typing.Optional[typing.Sequence[float]] = None
) -> typing.List[PhaseRecord]:
    """
    One :class:`PhaseRecord` per sample of ``grid`` (the path grid by
    default). Indices come from a single crossing scan of ``path``;
    degenerate samples are flagged and skipped by the unwrapping.
    """
    if not state.is_centered:
        raise NotCentered("state has a non-zero mean; use affine_phase_series")
    _checked_state(state, path.n)
    times = _sample_times(path, grid)
    nus = cz_track(path, times)
    matrices = [path.at(t) for t in times]
    return _records(times, matrices, nus, lambda i, S, nu: trace_gaussian(S, nu, state))


def affine_phase_series(affine: AffinePath, state: GaussianState) -> typing.List[PhaseRecord]:
    """Phase records of ``e^(i gamma_t/hbar) T(z_t) S_t`` on the base grid"""
    base = affine.base
    _checked_state(state, base.n)
    nus = cz_track(base)
    return _records(
        base.times,
        base.matrices,
        nus,
        lambda i, S, nu: trace_inhomogeneous(S, nu, affine.z_t[i], affine.gamma_t[i], state),
    )


def _cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    if len(times) < 3:
        return integrate.cumulative_trapezoid(values, times, initial=0.0)
    return integrate.cumulative_simpson(values, x=times, initial=0.0)


def energy_expectation(
    K: np.ndarray, state: GaussianState, force: typing.Optional[np.ndarray] = None
) -> float:
    """``Tr(rho H) = 1/2 tr(K V) + 1/2 K zbar.zbar (+ l.zbar)`` for ``H = 1/2 Kz.z + l.z``"""
    zbar = state.mean
    value = 0.5 * np.trace(K @ state.V) + 0.5 * zbar @ K @ zbar
    if force is not None:
        value += np.asarray(force, dtype=float) @ zbar
    return float(value)


def dynamical_phase_series(
    path: SympPath,
    state: GaussianState,
    grid: typing.Optional[typing.Sequence[float]] = None,
    force: typing.Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    ``phi_d(t) = -(1/hbar) int_0^t Tr(rho H(t')) dt'`` at every sample, by
    cumulative Simpson integration on the grid; ``rho`` is the initial state
    """
    _checked_state(state, path.n)
    times = _sample_times(path, grid)
    if times[0] != 0.0:
        raise DimensionError("dynamical phase grid must start at 0")
    energies = np.array(
        [energy_expectation(path.hamiltonian(t).K, state, force) for t in times]
    )
    return -_cumulative(energies, times) / state.hbar


def dynamical_phase(
    path: SympPath,
    state: GaussianState,
    grid: typing.Optional[typing.Sequence[float]] = None,
    force: typing.Optional[np.ndarray] = None,
) -> float:
    return float(dynamical_phase_series(path, state, grid, force)[-1])


def geometric_phase(records: typing.Sequence[PhaseRecord], dynamical: typing.Sequence[float]) -> np.ndarray:
    """``phi - phi_d`` per record; NaN where the record has no phase"""
    if len(records) != len(dynamical):
        raise DimensionError("one dynamical phase per record is required")
    return np.array(
        [
            math.nan if rec.phase_unwrapped is None else rec.phase_unwrapped - d
            for rec, d in zip(records, dynamical)
        ]
    )
