"""
Symplectic isotopies: time-sampled paths ``t -> S_t`` with ``S_0 = I``,
optionally backed by a closed-form generator that gives exact values and
derivatives off the sample grid.
"""

import dataclasses
import logging
import typing

import numpy as np
from scipy import integrate, linalg

from . import symplectic_core as sc
from .errors import DimensionError, NotSymmetric, OutOfRange, SearchFailed

logger = logging.getLogger("metaphase")

MatrixFunction = typing.Callable[[float], np.ndarray]

#: tolerances for the driven orbit integration
DRIVE_RTOL = 1e-10
DRIVE_ATOL = 1e-12


class Generator(typing.Protocol):
    """Closed-form description of a path"""

    n: int

    def matrix(self, t: float) -> np.ndarray:
        ...

    def derivative(self, t: float) -> np.ndarray:
        ...

    def tag(self) -> typing.Dict[str, typing.Any]:
        ...


def _mode_rotation(omegas: np.ndarray, t: float) -> np.ndarray:
    c = np.diag(np.cos(omegas * t))
    s = np.diag(np.sin(omegas * t))
    return np.block([[c, s], [-s, c]])


def _mode_rotation_derivative(omegas: np.ndarray, t: float) -> np.ndarray:
    c = np.diag(omegas * np.cos(omegas * t))
    s = np.diag(omegas * np.sin(omegas * t))
    return np.block([[-s, c], [-c, -s]])


@dataclasses.dataclass(frozen=True)
class Harmonic:
    omega: float
    n: int = 1

    def matrix(self, t):
        return _mode_rotation(np.full(self.n, self.omega), t)

    def derivative(self, t):
        return _mode_rotation_derivative(np.full(self.n, self.omega), t)

    def tag(self):
        return {"harmonic": {"omega": self.omega, "modes": self.n}}


@dataclasses.dataclass(frozen=True)
class Exponential:
    X: np.ndarray

    @property
    def n(self):
        return self.X.shape[0] // 2

    def matrix(self, t):
        return linalg.expm(t * self.X)

    def derivative(self, t):
        return self.X @ linalg.expm(t * self.X)

    def tag(self):
        return {"exponential": {"X": self.X.tolist()}}


@dataclasses.dataclass(frozen=True)
class NormalModes:
    """``S_t = R^-1 Rot(t) R`` where ``Rot`` rotates mode ``j`` at ``omegas[j]``"""

    omegas: np.ndarray
    R: np.ndarray

    @property
    def n(self):
        return len(self.omegas)

    @property
    def R_inv(self):
        return sc.symplectic_inverse(self.R)

    def matrix(self, t):
        return self.R_inv @ _mode_rotation(self.omegas, t) @ self.R

    def derivative(self, t):
        return self.R_inv @ _mode_rotation_derivative(self.omegas, t) @ self.R

    def tag(self):
        return {"normal_modes": {"omegas": self.omegas.tolist(), "R": self.R.tolist()}}


@dataclasses.dataclass(frozen=True)
class Product:
    first: Generator
    second: Generator

    @property
    def n(self):
        return self.first.n

    def matrix(self, t):
        return self.first.matrix(t) @ self.second.matrix(t)

    def derivative(self, t):
        return self.first.derivative(t) @ self.second.matrix(
            t
        ) + self.first.matrix(t) @ self.second.derivative(t)

    def tag(self):
        return {"product": [self.first.tag(), self.second.tag()]}


@dataclasses.dataclass(frozen=True)
class Inverse:
    base: Generator

    @property
    def n(self):
        return self.base.n

    def matrix(self, t):
        return sc.symplectic_inverse(self.base.matrix(t))

    def derivative(self, t):
        S_inv = self.matrix(t)
        return -S_inv @ self.base.derivative(t) @ S_inv

    def tag(self):
        return {"inverse": self.base.tag()}


@dataclasses.dataclass(frozen=True)
class Conjugate:
    """``R S_t R^-1``"""

    base: Generator
    R: np.ndarray

    @property
    def n(self):
        return self.base.n

    def matrix(self, t):
        return self.R @ self.base.matrix(t) @ sc.symplectic_inverse(self.R)

    def derivative(self, t):
        return self.R @ self.base.derivative(t) @ sc.symplectic_inverse(self.R)

    def tag(self):
        return {"conjugate": {"base": self.base.tag(), "R": self.R.tolist()}}


@dataclasses.dataclass(frozen=True)
class Concatenate:
    """``first`` up to ``split``, then ``second(t - split) @ first(split)``"""

    first: Generator
    second: Generator
    split: float

    @property
    def n(self):
        return self.first.n

    def matrix(self, t):
        if t <= self.split:
            return self.first.matrix(t)
        return self.second.matrix(t - self.split) @ self.first.matrix(self.split)

    def derivative(self, t):
        if t <= self.split:
            return self.first.derivative(t)
        return self.second.derivative(t - self.split) @ self.first.matrix(self.split)

    def tag(self):
        return {"concatenate": [self.first.tag(), self.second.tag(), self.split]}


def _check_grid(grid: typing.Sequence[float]) -> np.ndarray:
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise DimensionError("a time grid needs at least two samples")
    if times[0] != 0.0:
        raise DimensionError(f"time grid must start at 0 (got {times[0]})")
    if np.any(np.diff(times) <= 0):
        raise DimensionError("time grid must be strictly increasing")
    return times


def _real_logm(A: np.ndarray) -> np.ndarray:
    L = linalg.logm(A)
    if np.iscomplexobj(L):
        if np.max(np.abs(L.imag)) > 1e-8 * max(1.0, np.max(np.abs(L.real))):
            raise DimensionError("path samples are too far apart to interpolate")
        L = L.real
    return L


@dataclasses.dataclass(frozen=True)
class SympPath:
    """
    A symplectic isotopy sampled on ``times``. ``matrices[0]`` is the
    identity. When ``generator`` is set, :meth:`at` and :meth:`derivative`
    are exact at every time; otherwise they interpolate along the one
    parameter subgroup joining neighbouring samples.
    """

    times: np.ndarray
    matrices: np.ndarray
    generator: typing.Optional[Generator] = None

    def __post_init__(self):
        times = _check_grid(self.times)
        matrices = np.asarray(self.matrices, dtype=float)
        if matrices.ndim != 3 or matrices.shape[0] != len(times):
            raise DimensionError("one matrix per time sample is required")
        n = sc.mode_count(matrices[0])
        if np.max(np.abs(matrices[0] - np.eye(2 * n))) > sc.SYMPLECTIC_TOL:
            raise DimensionError("a symplectic isotopy must start at the identity")
        matrices = matrices.copy()
        matrices[0] = np.eye(2 * n)
        for S in matrices:
            sc.check_symplectic(S, relative=True)

        times = times.copy()
        times.flags.writeable = False
        matrices.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "matrices", matrices)

    @classmethod
    def from_generator(cls, generator: Generator, grid: typing.Sequence[float]) -> "SympPath":
        times = _check_grid(grid)
        matrices = np.array([generator.matrix(t) for t in times])
        return cls(times, matrices, generator)

    @property
    def n(self) -> int:
        return self.matrices.shape[1] // 2

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def endpoint(self) -> np.ndarray:
        return self.matrices[-1]

    def __len__(self) -> int:
        return len(self.times)

    def _locate(self, t: float) -> int:
        if t < 0 or t > self.duration * (1 + 1e-12):
            raise OutOfRange(f"t = {t} is outside the path [0, {self.duration}]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self.times) - 2)

    def _interval_log(self, i: int) -> np.ndarray:
        step = sc.symplectic_inverse(self.matrices[i]) @ self.matrices[i + 1]
        return _real_logm(step)

    def at(self, t: float) -> np.ndarray:
        if self.generator is not None:
            if t < 0 or t > self.duration * (1 + 1e-12):
                raise OutOfRange(f"t = {t} is outside the path [0, {self.duration}]")
            return self.generator.matrix(t)

        i = self._locate(t)
        t0, t1 = self.times[i], self.times[i + 1]
        if t == t0:
            return self.matrices[i]
        if t == t1:
            return self.matrices[i + 1]
        tau = (t - t0) / (t1 - t0)
        return self.matrices[i] @ linalg.expm(tau * self._interval_log(i))

    def derivative(self, t: float) -> typing.Tuple[np.ndarray, bool]:
        """
        Returns ``(dS/dt, one_sided)``. Sampled paths use centred differences
        at grid points (second order one-sided ones at the two ends) and the
        derivative of the interpolant elsewhere.
        """
        if self.generator is not None:
            if t < 0 or t > self.duration * (1 + 1e-12):
                raise OutOfRange(f"t = {t} is outside the path [0, {self.duration}]")
            return self.generator.derivative(t), False

        i = self._locate(t)
        times, mats = self.times, self.matrices
        on_grid = [j for j in (i, i + 1) if times[j] == t]
        if not on_grid:
            t0, t1 = times[i], times[i + 1]
            L = self._interval_log(i)
            tau = (t - t0) / (t1 - t0)
            return mats[i] @ linalg.expm(tau * L) @ L / (t1 - t0), False

        j = on_grid[0]
        last = len(times) - 1
        if 0 < j < last:
            return (mats[j + 1] - mats[j - 1]) / (times[j + 1] - times[j - 1]), False
        if len(times) < 3:
            h = times[1] - times[0]
            return (mats[1] - mats[0]) / h, True
        if j == 0:
            h = times[1] - times[0]
            return (-3 * mats[0] + 4 * mats[1] - mats[2]) / (2 * h), True
        h = times[last] - times[last - 1]
        return (3 * mats[last] - 4 * mats[last - 1] + mats[last - 2]) / (2 * h), True

    def hamiltonian(self, t: float) -> sc.HamiltonianSample:
        return sc.hamiltonian_from_path(self, t)

    def _derived(self, generator, fn: typing.Callable[[int], np.ndarray]) -> "SympPath":
        if generator is not None:
            return SympPath.from_generator(generator, self.times)
        return SympPath(self.times, np.array([fn(i) for i in range(len(self.times))]))

    def inverse(self) -> "SympPath":
        """The path ``t -> S_t^-1``"""
        gen = Inverse(self.generator) if self.generator is not None else None
        return self._derived(gen, lambda i: sc.symplectic_inverse(self.matrices[i]))

    def conjugate(self, R: np.ndarray) -> "SympPath":
        """The path ``t -> R S_t R^-1``"""
        R = sc.check_symplectic(R, relative=True)
        R_inv = sc.symplectic_inverse(R)
        gen = Conjugate(self.generator, R) if self.generator is not None else None
        return self._derived(gen, lambda i: R @ self.matrices[i] @ R_inv)

    def product(self, other: "SympPath") -> "SympPath":
        """Pointwise product ``t -> S_t S'_t`` on a shared grid"""
        if len(other.times) != len(self.times) or np.any(other.times != self.times):
            raise DimensionError("pointwise products need identical time grids")
        gen = None
        if self.generator is not None and other.generator is not None:
            gen = Product(self.generator, other.generator)
        return self._derived(gen, lambda i: self.matrices[i] @ other.matrices[i])

    def concatenate(self, other: "SympPath") -> "SympPath":
        """Runs ``self`` and then ``other`` started from ``self.endpoint``"""
        split = self.duration
        times = np.concatenate([self.times, split + other.times[1:]])
        if self.generator is not None and other.generator is not None:
            return SympPath.from_generator(
                Concatenate(self.generator, other.generator, split), times
            )
        matrices = np.concatenate(
            [self.matrices, np.array([S @ self.endpoint for S in other.matrices[1:]])]
        )
        return SympPath(times, matrices)

    def refine(self, factor: int) -> "SympPath":
        """Subdivides every grid interval into ``factor`` pieces"""
        if factor < 1:
            raise ValueError("refinement factor must be positive")
        pieces = [
            np.linspace(t0, t1, factor + 1)[:-1]
            for t0, t1 in zip(self.times[:-1], self.times[1:])
        ]
        times = np.concatenate(pieces + [self.times[-1:]])
        if self.generator is not None:
            return SympPath.from_generator(self.generator, times)
        return SympPath(times, np.array([self.at(t) for t in times]))


def harmonic_path(omega: float, grid: typing.Sequence[float], modes: int = 1) -> SympPath:
    """Rotations ``S_t = [[cos wt, sin wt], [-sin wt, cos wt]]`` on every mode"""
    if not omega > 0:
        raise ValueError(f"omega must be positive (got {omega})")
    return SympPath.from_generator(Harmonic(float(omega), modes), grid)


def one_parameter_group(X: np.ndarray, grid: typing.Sequence[float]) -> SympPath:
    """``S_t = exp(tX)`` for ``X`` in the symplectic Lie algebra"""
    X = np.asarray(X, dtype=float)
    n = sc.mode_count(X)
    JX = sc.standard_form(n) @ X
    if np.max(np.abs(JX - JX.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(X))):
        raise NotSymmetric("JX must be symmetric for X to lie in sp(n)")
    return SympPath.from_generator(Exponential(X), grid)


def normal_mode_path(
    omegas: typing.Sequence[float],
    R: typing.Optional[np.ndarray],
    grid: typing.Sequence[float],
) -> SympPath:
    """Flow of ``H(z) = 1/2 R^T D R z.z`` with ``D = diag(omegas, omegas)``"""
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim != 1 or len(omegas) == 0:
        raise DimensionError("omegas must be a non-empty vector")
    if np.any(omegas <= 0):
        raise ValueError("normal mode frequencies must be positive")
    n = len(omegas)
    R = np.eye(2 * n) if R is None else sc.check_symplectic(R, relative=True)
    if R.shape != (2 * n, 2 * n):
        raise DimensionError(f"R must be {2 * n}x{2 * n} for {n} modes")
    return SympPath.from_generator(NormalModes(omegas, R), grid)


def _hamiltonian_fn(K) -> MatrixFunction:
    if callable(K):
        return K
    K = np.asarray(K, dtype=float)
    return lambda t: K


def flow(K, grid: typing.Sequence[float]) -> SympPath:
    """
    Integrates ``S' = J K(t) S`` from the identity. Each step multiplies by
    ``exp(J K(t_mid) dt)`` and is followed by a symplectic re-projection.

    :param K: constant symmetric matrix or a function of time returning one
    """
    times = _check_grid(grid)
    K_fn = _hamiltonian_fn(K)
    K0 = np.asarray(K_fn(times[0]), dtype=float)
    n = sc.mode_count(K0)
    J = sc.standard_form(n)

    matrices = [np.eye(2 * n)]
    S = np.eye(2 * n)
    for t0, t1 in zip(times[:-1], times[1:]):
        K_mid = np.asarray(K_fn(0.5 * (t0 + t1)), dtype=float)
        if np.max(np.abs(K_mid - K_mid.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(K_mid))):
            raise NotSymmetric(f"K({0.5 * (t0 + t1)}) is not symmetric")
        S = sc.symplectic_projection(linalg.expm((t1 - t0) * J @ sc.sym(K_mid)) @ S)
        matrices.append(S)

    return SympPath(times, np.array(matrices))


@dataclasses.dataclass(frozen=True)
class AffinePath:
    """
    An inhomogeneous isotopy ``U_t = e^(i gamma_t / hbar) T(z_t) S_t``.
    ``z_t`` has one phase space vector per sample of ``base``.
    """

    base: SympPath
    z_t: np.ndarray
    gamma_t: np.ndarray

    def __post_init__(self):
        z_t = np.asarray(self.z_t, dtype=float)
        gamma_t = np.asarray(self.gamma_t, dtype=float)
        N, n = len(self.base.times), self.base.n
        if z_t.shape != (N, 2 * n):
            raise DimensionError(f"z_t must have shape {(N, 2 * n)} (got {z_t.shape})")
        if gamma_t.shape != (N,):
            raise DimensionError(f"gamma_t must have shape {(N,)} (got {gamma_t.shape})")
        if np.any(z_t[0] != 0) or gamma_t[0] != 0:
            logger.debug("affine path does not start at the identity")
        object.__setattr__(self, "z_t", z_t)
        object.__setattr__(self, "gamma_t", gamma_t)

    @property
    def times(self) -> np.ndarray:
        return self.base.times

    def classical_flow(self, z_initial: np.ndarray) -> np.ndarray:
        """Trajectory ``z(t) = S_t (z(0) - z_0) + z_t`` at every sample"""
        z_initial = np.asarray(z_initial, dtype=float)
        u0 = z_initial - self.z_t[0]
        return np.einsum("tij,j->ti", self.base.matrices, u0) + self.z_t


def affine_extend(
    base: SympPath, z_t: typing.Sequence, gamma_t: typing.Sequence[float]
) -> AffinePath:
    return AffinePath(base, np.asarray(z_t, dtype=float), np.asarray(gamma_t, dtype=float))


def driven_path(
    base: SympPath, force, rtol: float = DRIVE_RTOL, atol: float = DRIVE_ATOL
) -> AffinePath:
    """
    Affine extension generated by adding the linear term ``l(t).z`` to the
    quadratic Hamiltonian of ``base``. ``z_t`` and ``gamma_t`` solve

        z' = J (K z + l),   gamma' = 1/2 K z.z - 1/2 sigma(z, z')

    from zero, integrated with ``solve_ivp`` (DOP853) and read off at the
    samples of ``base``.

    :param force: constant vector ``l`` or a function of time returning one
    """
    n = base.n
    J = sc.standard_form(n)
    if callable(force):
        force_fn = force
    else:
        ell = np.asarray(force, dtype=float)
        if ell.shape != (2 * n,):
            raise DimensionError(f"force must have {2 * n} components")
        force_fn = lambda t: ell

    def rhs(t, y):
        z = y[:-1]
        K = base.hamiltonian(min(t, base.duration)).K
        z_dot = J @ (K @ z + np.asarray(force_fn(t), dtype=float))
        gamma_dot = 0.5 * z @ K @ z - 0.5 * sc.sigma(z, z_dot)
        return np.append(z_dot, gamma_dot)

    sol = integrate.solve_ivp(
        rhs,
        (0.0, base.duration),
        np.zeros(2 * n + 1),
        method="DOP853",
        t_eval=base.times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise SearchFailed(f"driven orbit integration failed: {sol.message}")
    logger.debug("driven orbit: %d right hand side evaluations", sol.nfev)

    states = sol.y.T
    return AffinePath(base, states[:, :-1], states[:, -1])
