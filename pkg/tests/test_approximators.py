import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from echolearn.approximators import (
    Adam,
    Mlp,
    PolyModel,
    bit_monomials,
    dump_approximator,
    init_mlp,
    init_poly,
    iq_monomials,
    load_approximator,
    poly_features_bits,
    poly_features_iq,
    word_inputs,
)
from echolearn.core import make_rng
from echolearn.gradcheck import TOLERANCE, check_mlp, check_poly


def test_init_bounds_and_bias():
    m = init_mlp([50, 20, 4], make_rng(0))
    assert np.all(np.abs(m.weights[0]) <= 1 / np.sqrt(50))
    assert np.all(np.abs(m.weights[1]) <= 1 / np.sqrt(20))
    assert all(np.all(b == 0.01) for b in m.biases)


def test_init_deterministic():
    a, b = init_mlp([2, 5, 2], make_rng(4)), init_mlp([2, 5, 2], make_rng(4))
    assert all(np.array_equal(x, y) for x, y in zip(a.params, b.params))


def test_zero_output_layer():
    m = init_mlp([2, 8, 3], make_rng(0))
    m.weights[1][:] = 0
    assert np.allclose(m(make_rng(1).standard_normal((5, 2))), 0.01)


def test_linear_in_last_layer():
    m = init_mlp([2, 8, 3], make_rng(0))
    x = make_rng(1).standard_normal((5, 2))
    w = m.weights[1].copy()
    out1 = m(x) - m.biases[1]
    m.weights[1][:] = 2.5 * w
    assert np.allclose(m(x) - m.biases[1], 2.5 * out1)


def test_mlp_shape_errors():
    m = init_mlp([2, 3, 4], make_rng(0))
    with pytest.raises(ValueError):
        m(np.zeros((5, 3)))
    with pytest.raises(ValueError):
        Mlp([np.zeros((2, 3)), np.zeros((4, 1))], [np.zeros(3), np.zeros(1)])
    with pytest.raises(ValueError):
        init_mlp([2], make_rng(0))


@pytest.mark.parametrize("seed", range(3))
def test_mlp_gradients(seed):
    assert check_mlp(seed) < TOLERANCE


@pytest.mark.parametrize("seed", range(3))
def test_poly_gradients(seed):
    assert check_poly(seed) < TOLERANCE


def test_bit_features():
    assert poly_features_bits([[1, 0]]).tolist() == [[1, 1, 0, 0]]
    assert poly_features_bits([[0, 0, 0]]).tolist() == [[1, 0, 0, 0, 0, 0, 0, 0]]
    assert len(bit_monomials(4)) == 16
    assert len(bit_monomials(4, 1)) == 5


def test_iq_features():
    assert poly_features_iq([[1.0, 2.0]], 2).tolist() == [[1, 1, 1, 2, 4, 2]]
    assert poly_features_iq([[3.0, -1.5]], 1).tolist() == [[1, 3.0, -1.5]]
    assert len(iq_monomials(2)) == 6
    with pytest.raises(ValueError):
        iq_monomials(0)


@given(st.integers(1, 6))
def test_iq_monomials_complete(d):
    # every (i, j) with 1 <= i + j <= d appears exactly once, plus the constant
    mons = iq_monomials(d)
    expected = {(i, j) for i in range(d + 1) for j in range(d + 1) if i + j <= d}
    assert len(mons) == len(expected) and set(mons) == expected


@given(st.integers(1, 4), st.data())
def test_bit_features_are_products(b, data):
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=b, max_size=b)))[None, :]
    f = poly_features_bits(bits)[0]
    for value, mon in zip(f, bit_monomials(b)):
        assert value == np.prod(bits[0, list(mon)])


def test_poly_shape_checks():
    with pytest.raises(ValueError):
        PolyModel("iq", 2, 2, np.zeros((5, 4)))
    with pytest.raises(ValueError):
        PolyModel("iq", 3, 2, np.zeros((6, 4)))
    with pytest.raises(ValueError):
        PolyModel("xx", 2, 2, np.zeros((6, 4)))


def test_poly_modulator_can_place_every_word_anywhere():
    # the full multilinear basis is invertible on the word inputs
    for b in (1, 2, 3, 4):
        f = poly_features_bits(word_inputs(b))
        assert np.linalg.matrix_rank(f) == 2**b


# --- Adam ---------------------------------------------------------------------

def test_adam_zero_gradient():
    p = [np.array([1.0, -2.0])]
    Adam().step(p, [np.zeros(2)], 0.1)
    assert p[0].tolist() == [1.0, -2.0]


@given(st.lists(st.floats(-1e3, 1e3).filter(lambda x: abs(x) > 1e-3), min_size=1, max_size=8))
def test_adam_first_step_is_bounded(g):
    p0 = np.zeros(len(g))
    p = [p0.copy()]
    Adam().step(p, [np.array(g)], 0.05)
    assert np.all(np.abs(p[0]) <= 0.05 * (1 + 1e-6))
    assert np.all(np.sign(p[0]) == -np.sign(g))


def test_adam_descends_quadratic():
    theta = np.array([1.0])
    opt = Adam()
    for _ in range(100):
        opt.step([theta], [2 * theta], 0.1)
    assert abs(theta[0]) < 0.1


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        Adam().step([np.zeros(2)], [np.zeros(3)], 0.1)


def test_adam_copy_is_independent():
    a = Adam()
    p = [np.ones(2)]
    a.step(p, [np.ones(2)], 0.1)
    b = a.copy()
    a.step(p, [np.ones(2)], 0.1)
    assert b.t == 1 and a.t == 2
    assert not np.array_equal(a.m[0], b.m[0])


# --- checkpoint format ----------------------------------------------------------

@pytest.mark.parametrize("maker", [
    lambda r: init_mlp([2, 7, 3, 4], r),
    lambda r: init_poly("bits", 3, 2, None, r),
    lambda r: init_poly("iq", 2, 8, 3, r),
])
def test_checkpoint_round_trip(maker):
    m = maker(make_rng(2))
    buf = dump_approximator(m) + b"tail"
    back, pos = load_approximator(buf)
    assert buf[pos:] == b"tail"
    assert all(np.array_equal(x, y) for x, y in zip(m.params, back.params))
    x = make_rng(3).random((4, back.widths[0]))
    assert np.array_equal(m(x), back(x))


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        load_approximator(b"not a model at all")
