import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maln.emission import (
    VAR_FLOOR,
    GaussianSequence,
    emission_matrix,
    gaussian_log_prob,
    grad_gaussians,
)
from maln.lattice import lattice
from maln.tensor import ShapeError

from conftest import central_diff, rel_err


def test_standard_normal_at_mean():
    assert gaussian_log_prob([0.0], [0.0], [0.0]) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_two_dims_unit_offset():
    assert gaussian_log_prob([1.0, 1.0], [0.0, 0.0], [0.0, 0.0]) == pytest.approx(
        -2.8378770664093455, abs=1e-12)


def test_variance_four():
    assert gaussian_log_prob([0.0], [0.0], [math.log(4.0)]) == pytest.approx(
        -1.612085713764618, abs=1e-12)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        gaussian_log_prob([0.0, 1.0], [0.0], [0.0])


def test_variance_floor_caps_density():
    tiny = gaussian_log_prob([0.0], [0.0], [-60.0])
    assert tiny == pytest.approx(-0.5 * (math.log(2 * math.pi) + math.log(VAR_FLOOR)))


def test_matrix_single_cell():
    out = emission_matrix(np.zeros((1, 1)), GaussianSequence(np.zeros((1, 1)), np.zeros((1, 1))))
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_duplicated_tokens_give_identical_columns(rng):
    mu = rng.normal(size=(1, 3))
    lv = rng.normal(size=(1, 3))
    g = GaussianSequence(np.vstack([mu, mu]), np.vstack([lv, lv]))
    out = emission_matrix(rng.normal(size=(4, 3)), g)
    assert np.array_equal(out[:, 0], out[:, 1])


def test_matrix_matches_entrywise_loop(rng):
    mel = rng.normal(size=(3, 4))
    g = GaussianSequence(rng.normal(size=(2, 4)), rng.normal(size=(2, 4)))
    out = emission_matrix(mel, g)
    for t in range(3):
        for s in range(2):
            assert out[t, s] == pytest.approx(
                gaussian_log_prob(mel[t], g.means[s], g.log_vars[s]), abs=1e-12)


def test_channel_mismatch(rng):
    with pytest.raises(ShapeError):
        emission_matrix(rng.normal(size=(3, 2)), GaussianSequence(np.zeros((2, 3)), np.zeros((2, 3))))


def test_packed_roundtrip(rng):
    g = GaussianSequence(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))
    back = GaussianSequence.from_packed(g.packed())
    assert np.array_equal(back.means, g.means) and np.array_equal(back.log_vars, g.log_vars)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_translation_invariance(y, mu, lv, shift):
    y, mu, shift = map(np.array, (y, mu, shift))
    a = gaussian_log_prob(y, mu, lv)
    b = gaussian_log_prob(y + shift, mu + shift, lv)
    assert abs(a - b) < 1e-9 * max(1.0, abs(a))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.01, 3.0), st.floats(-3, 3))
def test_monotone_in_distance(gap, extra, lv):
    near = gaussian_log_prob([gap], [0.0], [lv])
    far = gaussian_log_prob([gap + extra], [0.0], [lv])
    assert far < near


def test_log_prob_gradients_match_finite_differences(rng):
    y = rng.normal(size=4)
    mu = rng.normal(size=4)
    lv = rng.normal(scale=0.5, size=4)
    var = np.exp(lv)
    d_mu = (y - mu) / var
    d_lv = 0.5 * ((y - mu) ** 2 / var - 1.0)
    assert rel_err(d_mu, central_diff(lambda x: gaussian_log_prob(y, x, lv), mu)) < 1e-6
    assert rel_err(d_lv, central_diff(lambda x: gaussian_log_prob(y, mu, x), lv)) < 1e-6


class TestGradGaussians:
    def test_nll_gradient_mean(self):
        d_means, _ = grad_gaussians(np.ones((1, 1)), [[1.0]], GaussianSequence([[0.0]], [[0.0]]))
        assert d_means[0, 0] == pytest.approx(-1.0)

    def test_nll_gradient_log_var_at_mean(self):
        _, d_lv = grad_gaussians(np.ones((1, 1)), [[0.0]], GaussianSequence([[0.0]], [[0.0]]))
        assert d_lv[0, 0] == pytest.approx(0.5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            grad_gaussians(np.ones((2, 2)), np.zeros((3, 1)), GaussianSequence(np.zeros((2, 1)), np.zeros((2, 1))))

    def test_matches_finite_differences_of_loss(self, rng):
        n, m, d = 4, 2, 3
        mel = rng.normal(size=(n, d))
        mu = rng.normal(size=(m, d))
        lv = rng.normal(scale=0.3, size=(m, d))
        g = GaussianSequence(mu, lv)
        gamma = lattice(emission_matrix(mel, g)).gamma
        d_mu, d_lv = grad_gaussians(gamma, mel, g)

        def loss_mu(x):
            return -lattice(emission_matrix(mel, GaussianSequence(x, lv))).total_log_prob

        def loss_lv(x):
            return -lattice(emission_matrix(mel, GaussianSequence(mu, x))).total_log_prob

        assert rel_err(d_mu, central_diff(loss_mu, mu)) < 1e-6
        assert rel_err(d_lv, central_diff(loss_lv, lv)) < 1e-6

    def test_floored_log_var_has_zero_gradient(self):
        g = GaussianSequence([[0.0]], [[-40.0]])
        _, d_lv = grad_gaussians(np.ones((1, 1)), [[0.3]], g)
        assert d_lv[0, 0] == 0.0
