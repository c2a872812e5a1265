import cmath
import math

import numpy as np
import pytest

from metaphase import gaussian_state as gs
from metaphase import isotopy, phase_shift
from metaphase import symplectic_core as sc
from metaphase.cz_index import cz_crossing, cz_harmonic_closed
from metaphase.errors import DegenerateEndpoint, NotCentered, NotPositiveDefinite

TABLE_TIMES = [0.3, 1.0, 2.5, 4.0, 5.5, 7.0, 8.5]


def harmonic_trace(omega, t, state):
    nu = cz_harmonic_closed(omega, t).nu
    return phase_shift.trace_gaussian(sc.rotation(omega * t), nu, state)


def wrapped(x):
    return math.remainder(x, 2 * math.pi)


def test_fresnel_det_invsqrt():
    A = np.diag([1.0 + 1.0j, 2.0 - 0.5j])
    expected = 1 / (cmath.sqrt(1.0 + 1.0j) * cmath.sqrt(2.0 - 0.5j))
    assert phase_shift.fresnel_det_invsqrt(A) == pytest.approx(expected)

    with pytest.raises(NotPositiveDefinite):
        phase_shift.fresnel_det_invsqrt(np.diag([-1.0 + 1.0j, 1.0]))


@pytest.mark.parametrize("t", TABLE_TIMES)
def test_harmonic_coherent_trace(t):
    trace = harmonic_trace(1.0, t, gs.coherent())
    assert trace == pytest.approx(cmath.exp(-0.5j * t), abs=1e-9)


@pytest.mark.parametrize("hbar", [0.5, 1.0, 2.0])
def test_harmonic_coherent_trace_any_hbar(hbar):
    trace = harmonic_trace(1.3, 2.0, gs.coherent(hbar=hbar))
    assert trace == pytest.approx(cmath.exp(-1.3j), abs=1e-9)


@pytest.mark.parametrize("t", [0.4, 2.0, 3.5, 5.0, 7.5])
def test_harmonic_thermal_trace(t):
    nbar = 0.8
    q = nbar / (nbar + 1)
    expected = (1 - q) * cmath.exp(-0.5j * t) / (1 - q * cmath.exp(-1j * t))
    trace = harmonic_trace(1.0, t, gs.thermal(nbar=[nbar]))
    assert trace == pytest.approx(expected, abs=1e-9)


def test_trace_rejects_bad_inputs():
    with pytest.raises(NotCentered):
        phase_shift.trace_gaussian(sc.rotation(1.0), -1, gs.coherent(mean=[1.0, 0.0]))
    with pytest.raises(DegenerateEndpoint):
        phase_shift.trace_gaussian(sc.rotation(2 * math.pi), -2, gs.coherent())


def test_trace_index_sets_sign():
    state = gs.coherent()
    S = sc.rotation(1.0)
    assert phase_shift.trace_gaussian(S, 1, state) == pytest.approx(
        -phase_shift.trace_gaussian(S, -1, state)
    )


def test_inhomogeneous_reduces_to_homogeneous():
    rng = np.random.default_rng(11)
    S = sc.random_symplectic(2, rng)
    nu = 0 if sc.det_s_minus_i(S) > 0 else 1
    state = gs.thermal(nbar=[0.3, 1.2])
    assert phase_shift.trace_inhomogeneous(S, nu, np.zeros(4), 0.0, state) == pytest.approx(
        phase_shift.trace_gaussian(S, nu, state)
    )


@pytest.mark.parametrize("t", [0.7, 2.0, 4.5])
def test_displaced_coherent_state(t):
    # <a| e^(-iHt) |a> = e^(-it/2) exp(-|a|^2 (1 - e^(-it)))
    mean = np.array([1.0, 0.5])
    state = gs.coherent(mean=mean)
    alpha2 = mean @ mean / 2
    expected = cmath.exp(-0.5j * t) * cmath.exp(-alpha2 * (1 - cmath.exp(-1j * t)))

    nu = cz_harmonic_closed(1.0, t).nu
    trace = phase_shift.trace_inhomogeneous(sc.rotation(t), nu, np.zeros(2), 0.0, state)
    assert trace == pytest.approx(expected, abs=1e-9)


def test_inhomogeneous_gamma_phase():
    state = gs.coherent(hbar=0.5)
    S = sc.rotation(1.0)
    z_t = np.array([0.2, -0.1])
    base = phase_shift.trace_inhomogeneous(S, -1, z_t, 0.0, state)
    shifted = phase_shift.trace_inhomogeneous(S, -1, z_t, 0.3, state)
    assert shifted == pytest.approx(base * cmath.exp(0.6j))


def test_trace_generalized_matches_path():
    omegas = [1.0, 2.0]
    R = np.diag([2.0, 1.0, 0.5, 1.0])
    state = gs.thermal(nbar=[0.2, 0.5])
    t = 1.2

    path = isotopy.normal_mode_path(omegas, R, np.linspace(0.0, t, 121))
    direct = phase_shift.trace_gaussian(path.endpoint, cz_crossing(path).nu, state)
    assert phase_shift.trace_generalized(omegas, R, t, state) == pytest.approx(direct, abs=1e-9)


def test_trace_generalized_coherent():
    t = 1.0
    trace = phase_shift.trace_generalized([1.0, 2.0], None, t, gs.coherent(2))
    assert trace == pytest.approx(cmath.exp(-1.5j * t), abs=1e-9)


def test_phase_series_harmonic_table():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 9.0, 181))
    records = phase_shift.phase_series(path, gs.coherent(), grid=TABLE_TIMES)
    assert [r.t for r in records] == TABLE_TIMES
    for rec in records:
        assert not rec.degenerate
        assert rec.nu == cz_harmonic_closed(1.0, rec.t).nu
        assert wrapped(rec.phase_principal + rec.t / 2) == pytest.approx(0.0, abs=1e-9)
        assert -math.pi < rec.phase_principal <= math.pi


def test_phase_series_unwraps():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 3 * math.pi, 201))
    records = phase_shift.phase_series(path, gs.coherent())

    assert records[0].degenerate
    assert records[0].trace is None

    live = [r for r in records if not r.degenerate]
    assert len(live) == len(records) - 1
    for rec in live:
        assert rec.phase_unwrapped == pytest.approx(-rec.t / 2, abs=1e-9)


@pytest.mark.parametrize("steps", [14, 61, 100, 137])
def test_phase_series_sign_on_any_grid(steps):
    # the crossing at 2 pi falls between samples on all of these grids
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 3 * math.pi, steps + 1))
    records = phase_shift.phase_series(path, gs.coherent())
    for rec in records[1:]:
        assert rec.trace == pytest.approx(cmath.exp(-0.5j * rec.t), abs=1e-9)


def test_phase_series_rejects_displaced_state():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 1.0, 11))
    with pytest.raises(NotCentered):
        phase_shift.phase_series(path, gs.coherent(mean=[1.0, 0.0]))


def test_affine_phase_series():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 4.0, 41))
    mean = np.array([0.3, -0.2])
    affine = isotopy.affine_extend(path, np.zeros((41, 2)), np.zeros(41))
    records = phase_shift.affine_phase_series(affine, gs.coherent(mean=mean))

    alpha2 = mean @ mean / 2
    for rec in records[1:]:
        expected = cmath.exp(-0.5j * rec.t) * cmath.exp(-alpha2 * (1 - cmath.exp(-1j * rec.t)))
        assert rec.trace == pytest.approx(expected, abs=1e-9)


def test_energy_expectation():
    K = np.diag([2.0, 1.0])
    state = gs.coherent(mean=[1.0, 2.0])
    # 1/2 tr(KV) + 1/2 K zbar.zbar + l.zbar
    assert phase_shift.energy_expectation(K, state) == pytest.approx(0.75 + 3.0)
    assert phase_shift.energy_expectation(K, state, force=[0.5, 0.0]) == pytest.approx(4.25)


def test_dynamical_phase():
    path = isotopy.harmonic_path(2.0, np.linspace(0.0, 3.0, 61))
    state = gs.thermal(nbar=[0.5])
    phases = phase_shift.dynamical_phase_series(path, state)
    assert np.allclose(phases, -2.0 * (0.5 + 0.5) * path.times, atol=1e-9)
    assert phase_shift.dynamical_phase(path, state) == pytest.approx(-6.0)


def test_dynamical_phase_short_grid():
    path = isotopy.harmonic_path(1.0, [0.0, 0.5])
    phases = phase_shift.dynamical_phase_series(path, gs.coherent())
    assert np.allclose(phases, [0.0, -0.25])


def test_geometric_phase_of_coherent_state_vanishes():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 3 * math.pi, 201))
    state = gs.coherent()
    records = phase_shift.phase_series(path, state)
    geometric = phase_shift.geometric_phase(
        records, phase_shift.dynamical_phase_series(path, state)
    )

    assert math.isnan(geometric[0])
    assert np.allclose(geometric[1:], 0.0, atol=1e-9)
