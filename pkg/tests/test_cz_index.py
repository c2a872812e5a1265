import math

import numpy as np
import pytest

from metaphase import cz_index
from metaphase import isotopy
from metaphase import symplectic_core as sc
from metaphase.errors import DegenerateEndpoint, DegenerateTime, NotFree

PI = math.pi


def harmonic(omega, t_max, steps=200, modes=1):
    return isotopy.harmonic_path(omega, np.linspace(0.0, t_max, steps + 1), modes)


@pytest.mark.parametrize(
    "wt, nu",
    [
        (PI / 2, -1),
        (0.3, -1),
        (3 * PI / 2, -1),
        (5.5, -1),
        (5 * PI / 2, -3),
        (8.5, -3),
        (4 * PI + 1.0, -5),
    ],
)
def test_harmonic_closed_form(wt, nu):
    result = cz_index.cz_harmonic_closed(1.0, wt)
    assert result.nu == nu
    assert result.nu_mod4 == nu % 4
    assert result.route is cz_index.CZRoute.CLOSED_FORM

    # only the product wt matters
    assert cz_index.cz_harmonic_closed(2.0, wt / 2).nu == nu


def test_harmonic_closed_form_degenerate():
    with pytest.raises(DegenerateTime):
        cz_index.cz_harmonic_closed(1.0, PI)
    with pytest.raises(DegenerateTime):
        cz_index.cz_harmonic_closed(1.0, 2 * PI)


@pytest.mark.parametrize("t", [0.5, 2.0, 4.0, 5.5, 7.0, 8.5])
def test_crossing_matches_closed_form(t):
    result = cz_index.cz_crossing(harmonic(1.0, t))
    assert result.nu == cz_index.cz_harmonic_closed(1.0, t).nu
    assert result.route is cz_index.CZRoute.CROSSING


def test_crossing_records_full_period():
    result = cz_index.cz_crossing(harmonic(1.0, 8.5))
    assert len(result.crossings) == 1
    crossing = result.crossings[0]
    assert crossing.time == pytest.approx(2 * PI, abs=1e-6)
    assert crossing.kernel_dim == 2
    assert crossing.signature == 2


def test_crossing_degenerate_endpoint():
    with pytest.raises(DegenerateEndpoint):
        cz_index.cz_crossing(harmonic(1.0, 2 * PI))


def test_crossing_on_sampled_path():
    exact = harmonic(1.0, 7.0, steps=140)
    sampled = isotopy.SympPath(exact.times, exact.matrices)
    assert cz_index.cz_crossing(sampled).nu == -3


def test_crossing_is_additive_over_modes():
    assert cz_index.cz_crossing(harmonic(1.0, 2.0, modes=2)).nu == -2

    path = isotopy.normal_mode_path([1.0, 2.0], None, np.linspace(0.0, 1.0, 101))
    assert cz_index.cz_crossing(path).nu == -2


def test_crossing_invariant_under_conjugation():
    R = sc.random_symplectic(1, np.random.default_rng(7))
    path = harmonic(1.0, 7.0).conjugate(R)
    assert cz_index.cz_crossing(path).nu == -3


def test_crossing_of_inverse_path():
    path = harmonic(1.0, 4.0)
    assert cz_index.cz_crossing(path.inverse()).nu == -cz_index.cz_crossing(path).nu


def test_track():
    path = harmonic(1.0, 8.5, steps=170)
    nus = cz_index.cz_track(path)
    assert nus[0] is None
    for t, nu in zip(path.times[1:], nus[1:]):
        assert nu == cz_index.cz_harmonic_closed(1.0, t).nu


def test_track_marks_degenerate_samples():
    path = harmonic(1.0, 3 * PI, steps=6)
    nus = cz_index.cz_track(path)
    # samples at wt = k pi/2; wt = 2 pi is degenerate
    assert nus[4] is None
    assert nus[2] == -1
    assert nus[5] == -3


def test_mod2_argdet():
    assert cz_index.cz_mod2_argdet(sc.rotation(PI / 2)) == 1
    assert cz_index.cz_mod2_argdet(sc.rotation(PI / 2, n=2)) == 0

    # det(S - I) < 0 for a hyperbolic matrix
    assert cz_index.cz_mod2_argdet(np.diag([2.0, 0.5])) == 0

    with pytest.raises(DegenerateEndpoint):
        cz_index.cz_mod2_argdet(np.eye(2))


def test_mod4_free():
    S = sc.rotation(PI / 2)
    W = sc.generating_function_from_matrix(S, m_choice=0)
    assert cz_index.cz_mod4_free(W) == 3


@pytest.mark.parametrize(
    "a, b, nu",
    [
        (0.4 * PI, 0.6 * PI, -1),
        (0.3 * PI, 0.5 * PI, -1),
        (0.8 * PI, 0.8 * PI, -1),
        (1.5 * PI, 1.5 * PI, -3),
    ],
)
def test_product(a, b, nu):
    nu_a = cz_index.cz_harmonic_closed(1.0, a).nu
    nu_b = cz_index.cz_harmonic_closed(1.0, b).nu
    assert cz_index.cz_product(nu_a, sc.rotation(a), nu_b, sc.rotation(b)) == nu
    assert cz_index.cz_crossing(harmonic(1.0, a + b)).nu == nu


def test_result_consistency():
    with pytest.raises(ValueError):
        cz_index.CZResult(nu_mod2=0, route=cz_index.CZRoute.CROSSING, nu_mod4=1)
    result = cz_index.CZResult.from_integer(-3, cz_index.CZRoute.PRODUCT)
    assert (result.nu_mod2, result.nu_mod4) == (1, 1)


def test_maslov_track():
    path = harmonic(1.0, 8.5, steps=170)
    track = cz_index.maslov_track(path)
    assert track.initial == 0
    assert [step for _, step in track.jumps] == [-1, -1]
    assert track(PI / 2) == 0
    assert track(3 * PI / 2) == -1
    assert track(5 * PI / 2) == -2

    with pytest.raises(NotFree):
        track(track.jumps[0][0])


@pytest.mark.parametrize("t", [0.5, 2.0, 4.0, 5.5, 7.0, 8.3])
def test_maslov_track_gives_index_mod4(t):
    path = harmonic(1.0, 8.5, steps=170)
    track = cz_index.maslov_track(path)
    W = sc.generating_function_from_matrix(path.at(t), m_choice=track(t))
    assert cz_index.cz_mod4_free(W) == cz_index.cz_harmonic_closed(1.0, t).nu % 4


@pytest.mark.parametrize(
    "grid",
    [
        np.linspace(0.0, 6.5, 14),
        np.array([0.0, 4.0, 8.0]),
        np.array([0.0, 8.0]),
        np.array([0.0, 0.2, 6.4, 7.0]),
    ],
)
def test_crossing_on_coarse_grids(grid):
    path = isotopy.harmonic_path(1.0, grid)
    expected = cz_index.cz_harmonic_closed(1.0, grid[-1]).nu
    assert cz_index.cz_crossing(path).nu == expected
    for factor in (2, 5, 50):
        assert cz_index.cz_crossing(path.refine(factor)).nu == expected


def test_crossing_does_not_depend_on_step_count():
    for steps in range(10, 400, 7):
        assert cz_index.cz_crossing(harmonic(1.0, 7.0, steps)).nu == -3


def test_crossing_in_last_interval():
    # the zero at 2 pi lies in the final scan step; the smallest singular
    # value is still falling at the last sample
    path = isotopy.harmonic_path(1.0, [0.0, 3.0, 6.0, 6.3])
    assert cz_index.cz_crossing(path).nu == -3
    assert cz_index.cz_track(path)[1:] == [-1, -1, -3]


def test_crossing_on_sampled_coarse_grid():
    exact = isotopy.harmonic_path(1.0, np.linspace(0.0, 8.0, 9))
    sampled = isotopy.SympPath(exact.times, exact.matrices)
    assert cz_index.cz_crossing(sampled).nu == -3


def test_loop_shifts_index_by_two():
    rng = np.random.default_rng(11)
    R = sc.random_symplectic(1, rng)
    path = isotopy.normal_mode_path([0.8], R, np.linspace(0.0, 2.0, 41))
    loop = isotopy.harmonic_path(1.0, np.linspace(0.0, 2 * PI, 41))

    nu = cz_index.cz_crossing(path).nu
    assert cz_index.cz_crossing(loop.concatenate(path)).nu == nu - 2
    assert cz_index.cz_crossing(loop.concatenate(loop).concatenate(path)).nu == nu - 4


@pytest.mark.parametrize("n", [1, 2])
def test_random_flows_match_determinant_parity(n):
    rng = np.random.default_rng(100 + n)
    J = sc.standard_form(n)
    checked = 0
    for _ in range(30):
        K = 0.8 * sc.sym(rng.normal(size=(2 * n, 2 * n)))
        path = isotopy.one_parameter_group(J @ K, np.linspace(0.0, 6.0, 61))
        # strongly hyperbolic flows lose the elliptic part to roundoff
        if np.linalg.norm(path.endpoint, 2) > 1e4 or sc.is_degenerate(path.endpoint, 1e-6):
            continue
        nu = cz_index.cz_crossing(path).nu
        assert nu % 2 == cz_index.cz_mod2_argdet(path.endpoint)
        checked += 1
    assert checked >= 10


def test_random_normal_mode_flows():
    rng = np.random.default_rng(2024)
    omegas = [0.7, 1.3]
    for _ in range(15):
        R = sc.random_symplectic(2, rng)
        T = float(rng.uniform(0.5, 9.0))
        try:
            expected = sum(cz_index.cz_harmonic_closed(w, T).nu for w in omegas)
        except DegenerateTime:
            continue
        path = isotopy.normal_mode_path(omegas, R, np.linspace(0.0, T, 31))
        if sc.is_degenerate(path.endpoint, 1e-6):
            continue

        nu = cz_index.cz_crossing(path).nu
        assert nu == expected
        assert nu % 2 == cz_index.cz_mod2_argdet(path.endpoint)

        track = cz_index.maslov_track(path)
        if sc.is_free(path.endpoint, 1e-6):
            W = sc.generating_function_from_matrix(path.endpoint, m_choice=track(T))
            assert cz_index.cz_mod4_free(W) == nu % 4


def test_product_formula_on_pointwise_products():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(12):
        T = float(rng.uniform(1.0, 6.0))
        grid = np.linspace(0.0, T, 41)
        first = isotopy.normal_mode_path([0.9, 1.4], sc.random_symplectic(2, rng), grid)
        second = isotopy.normal_mode_path([1.1, 0.6], sc.random_symplectic(2, rng), grid)
        S1, S2 = first.endpoint, second.endpoint
        if any(sc.is_degenerate(S, 1e-6) for S in (S1, S2, S1 @ S2)):
            continue

        nu1 = cz_index.cz_crossing(first).nu
        nu2 = cz_index.cz_crossing(second).nu
        product = first.product(second)
        assert cz_index.cz_crossing(product).nu == cz_index.cz_product(nu1, S1, nu2, S2)
        checked += 1
    assert checked >= 8
