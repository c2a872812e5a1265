import cmath
import math

import numpy as np
import pytest

from metaphase import isotopy
from metaphase import symplectic_core as sc
from metaphase import weyl_symbol as ws
from metaphase.cz_index import cz_mod4_free, cz_product
from metaphase.errors import DegenerateEndpoint, DimensionError, IndexMismatch
from metaphase.fock_oracle import twisted_convolution_at

PI = math.pi


def rot(theta, nu):
    return ws.MetaplecticElement(sc.rotation(theta), nu)


def test_element_index_reduced_mod4():
    elem = rot(1.0, -1)
    assert elem.nu == 3
    assert elem.n == 1
    assert rot(1.0, -5).nu == 3


def test_element_index_parity():
    with pytest.raises(IndexMismatch):
        rot(PI / 2, 0)
    # degenerate matrices carry no parity constraint
    ws.MetaplecticElement(np.eye(2), 0)


def test_element_from_path():
    path = isotopy.harmonic_path(1.0, np.linspace(0.0, 7.0, 141))
    elem = ws.MetaplecticElement.from_path(path)
    assert elem.nu == -3 % 4
    assert np.allclose(elem.S, sc.rotation(7.0))


def test_element_inverse():
    inv = rot(1.0, -1).inverse()
    assert inv.nu == 1
    assert np.allclose(inv.S, sc.rotation(-1.0))


def test_twisted_symbol_of_rotation():
    theta = 1.0
    symbol = ws.twisted_symbol(rot(theta, -1), hbar=0.5)
    prefactor = -1j / math.sqrt(2 - 2 * math.cos(theta))
    assert symbol(np.zeros(2)) == pytest.approx(prefactor)

    z = np.array([0.3, -0.7])
    m = 0.5 / math.tan(theta / 2)
    expected = prefactor * cmath.exp(0.5j * m * (z @ z) / 0.5)
    assert symbol(z) == pytest.approx(expected)

    batch = symbol(np.stack([z, z, np.zeros(2)]))
    assert batch.shape == (3,)


def test_twisted_symbol_degenerate():
    with pytest.raises(DegenerateEndpoint):
        ws.twisted_symbol(ws.MetaplecticElement(np.eye(2), 0))


def test_compose_rotations():
    product = ws.compose(rot(0.4 * PI, -1), rot(0.6 * PI, -1))
    assert np.allclose(product.S, sc.rotation(PI))
    assert product.nu == -1 % 4

    product = ws.compose(rot(1.5 * PI, -1), rot(1.5 * PI, -1))
    assert product.nu == -3 % 4


def test_compose_is_associative():
    rng = np.random.default_rng(5)
    elems = []
    for _ in range(3):
        S = sc.random_symplectic(1, rng)
        nu = 1 if sc.det_s_minus_i(S) > 0 else 0
        elems.append(ws.MetaplecticElement(S, nu))
    a, b, c = elems

    left = ws.compose(ws.compose(a, b), c)
    right = ws.compose(a, ws.compose(b, c))
    assert left.nu == right.nu
    assert np.allclose(left.S, right.S)


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionError):
        ws.compose(rot(1.0, -1), ws.MetaplecticElement(sc.rotation(1.0, n=2), 2))


@pytest.mark.parametrize(
    "a, b",
    [
        ((0.4 * PI, -1), (0.6 * PI, -1)),
        ((1.2, -1), (4.0, -1)),
        ((1.5 * PI, -1), (1.5 * PI, -1)),
    ],
)
def test_composition_symbol_is_twisted_convolution(a, b):
    hbar = 0.7
    ea, eb = rot(*a), rot(*b)
    sa, sb = ws.twisted_symbol(ea, hbar), ws.twisted_symbol(eb, hbar)
    product = ws.twisted_symbol(ws.compose(ea, eb), hbar)

    for z in (np.zeros(2), np.array([0.4, -0.3])):
        result = twisted_convolution_at(sa, sb, z)
        assert result.value == pytest.approx(product(z), abs=1e-6)


@pytest.mark.parametrize("theta, nu", [(1.0, -1), (4.0, -1), (7.0, -3)])
def test_free_factorization(theta, nu):
    S = sc.rotation(theta)
    factors = ws.free_factorization(S, nu)

    S1 = sc.matrix_from_generating_function(factors.first)
    S2 = sc.matrix_from_generating_function(factors.second)
    assert np.allclose(S1 @ S2, S, atol=1e-10)
    for F in (S1, S2):
        assert sc.is_free(F)
        assert not sc.is_degenerate(F)

    nu1 = cz_mod4_free(factors.first)
    nu2 = cz_mod4_free(factors.second)
    assert nu2 == -1 % 4
    assert (cz_product(nu1, S1, nu2, S2) - nu) % 4 == 0


def test_free_factorization_of_squeezer():
    S = np.diag([3.0, 1 / 3])
    factors = ws.free_factorization(S)
    S1 = sc.matrix_from_generating_function(factors.first)
    S2 = sc.matrix_from_generating_function(factors.second)
    assert np.allclose(S1 @ S2, S, atol=1e-10)


def test_displacement_compose():
    a = ws.DisplacementElement([1.0, 0.0], 0.1)
    b = ws.DisplacementElement([0.0, 1.0])
    ab = ws.displacement_compose(a, b)
    assert np.allclose(ab.z0, [1.0, 1.0])
    assert ab.phase == pytest.approx(0.1 + 0.5 * sc.sigma([1.0, 0.0], [0.0, 1.0]))

    identity = ws.displacement_compose(a, a.inverse())
    assert np.allclose(identity.z0, 0.0)
    assert identity.phase == pytest.approx(0.0)


def test_displacement_dimension():
    with pytest.raises(DimensionError):
        ws.DisplacementElement([1.0, 0.0, 0.0])
    with pytest.raises(DimensionError):
        ws.displaced_twisted_symbol(ws.DisplacementElement([1.0, 0.0]), ws.MetaplecticElement(sc.rotation(1.0, n=2), 2))


def test_displaced_symbol_without_shift():
    elem = rot(1.0, -1)
    plain = ws.twisted_symbol(elem)
    displaced = ws.displaced_twisted_symbol(ws.DisplacementElement([0.0, 0.0], 0.4), elem)
    z = np.array([0.2, 0.5])
    assert displaced(z) == pytest.approx(plain(z) * cmath.exp(0.4j))
