import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from oracles import dicke_embedding, product_space_spin, random_hermitian
from spinqfim.spinspace import (
    CollectiveOperator,
    PureState,
    UnitaryOperator,
    coherent_state,
    collective_operator,
    collective_operators,
    hermitian_exp,
    magnetic_numbers,
    unitary_from_generator,
)


def test_single_spin_jz():
    assert np.allclose(collective_operator(1, "z").matrix, np.diag([0.5, -0.5]))


def test_spin_one_jx_element():
    jx = collective_operator(2, "x").matrix
    assert jx[0, 1] == pytest.approx(np.sqrt(2) / 2)
    assert jx[1, 2] == pytest.approx(np.sqrt(2) / 2)
    assert jx[0, 2] == 0


def test_commutator_n4():
    jx, jy, jz = (j.matrix for j in collective_operators(4))
    assert np.abs(jx @ jy - jy @ jx - 1j * jz).max() <= 1e-12


def test_zero_spins_rejected():
    with pytest.raises(ValueError):
        collective_operator(0, "z")
    with pytest.raises(ValueError):
        collective_operator(3, "w")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_matches_product_space_restriction(n):
    # the Dicke-basis matrices are the restriction of the bitwise-built product-space ones
    emb = dicke_embedding(n)
    for full, op in zip(product_space_spin(n), collective_operators(n)):
        assert np.abs(emb.conj().T @ full @ emb - op.matrix).max() < 1e-12


@given(st.integers(1, 30))
def test_su2_algebra(n):
    jx, jy, jz = (j.matrix for j in collective_operators(n))
    for a, b, c in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
        assert np.abs(a @ b - b @ a - 1j * c).max() <= 1e-11
    j = n / 2
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.abs(casimir - j * (j + 1) * np.eye(n + 1)).max() <= 1e-10


def test_magnetic_numbers_order():
    assert list(magnetic_numbers(3)) == [1.5, 0.5, -0.5, -1.5]


def test_coherent_pole():
    psi = coherent_state(10, 0.0, 1.3)
    assert abs(psi.amplitudes[0]) == pytest.approx(1.0)


def test_coherent_equator_single_spin():
    psi = coherent_state(1, np.pi / 2, 0.0)
    assert np.allclose(psi.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_coherent_norm_and_range():
    assert abs(np.linalg.norm(coherent_state(7, 1.1, 2.3).amplitudes) - 1) <= 1e-12
    with pytest.raises(ValueError):
        coherent_state(3, -0.1, 0.0)
    with pytest.raises(ValueError):
        coherent_state(3, 0.2, 2 * np.pi)


def test_coherent_norm_random_sample():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 60))
        psi = coherent_state(n, rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        assert abs(np.linalg.norm(psi.amplitudes) - 1) <= 1e-12


def test_coherent_mean_spin_direction():
    th, ph = 0.7, 2.1
    psi = coherent_state(12, th, ph)
    mean = np.array([psi.expect(j).real for j in collective_operators(12)])
    assert np.allclose(mean, 6 * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))


def test_zero_exponent_is_identity():
    g = collective_operator(5, "y")
    assert np.allclose(unitary_from_generator(g, 0.0).matrix, np.eye(6))


def test_pi_rotation_flips_single_spin():
    u = unitary_from_generator(collective_operator(1, "y"), np.pi)
    out = u.apply(PureState(1, [1, 0]))
    assert abs(out.amplitudes[1]) == pytest.approx(1.0, abs=1e-12)
    assert abs(out.amplitudes[0]) < 1e-12


def test_against_pade_oracle():
    rng = np.random.default_rng(3)
    for dim in (2, 5, 9):
        h = random_hermitian(dim, rng)
        assert np.abs(hermitian_exp(h, 0.37) - expm(-0.37j * h)).max() <= 1e-9


def test_non_hermitian_rejected():
    m = np.zeros((3, 3), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(ValueError):
        unitary_from_generator(m, 1.0)
    with pytest.raises(ValueError):
        CollectiveOperator(2, m)


@given(st.integers(1, 12), st.floats(-3, 3), st.floats(-3, 3))
def test_group_property(n, a, b):
    g = collective_operators(n)[0].matrix + 0.3 * collective_operators(n)[2].matrix @ collective_operators(n)[2].matrix
    g = CollectiveOperator(n, g)
    ua = unitary_from_generator(g, a)
    ub = unitary_from_generator(g, b)
    assert np.abs((ua @ ub).matrix - unitary_from_generator(g, a + b).matrix).max() <= 1e-9


def test_unitary_and_state_validation():
    with pytest.raises(ValueError):
        UnitaryOperator(1, np.array([[1, 0], [0, 2]]))
    with pytest.raises(ValueError):
        PureState(1, [1, 1])
    with pytest.raises(ValueError):
        PureState(2, [1, 0])


def test_read_only_arrays():
    psi = coherent_state(3, 0.4, 0.2)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0
