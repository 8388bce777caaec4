import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

from spamforest.autoencoder import (AutoencoderParams, decode, encode,
                                    reconstruction_loss)
from spamforest.errors import ShapeError
from spamforest.numerics import Layer, Rng


def _sigma(z):
    return 1.0 / (1.0 + math.exp(-z))


def single_layer_params(W_e, b_e, W_d, b_d):
    return AutoencoderParams([Layer(W_e, b_e)], [Layer(W_d, b_d)])


class TestEncode:
    def test_zero_weights_give_half(self):
        params = single_layer_params(np.zeros((3, 2)), np.zeros(3),
                                     np.zeros((2, 3)), np.zeros(2))
        npt.assert_array_equal(encode([5.0, -9.0], params), [0.5, 0.5, 0.5])

    def test_identity_weights_elementwise_sigmoid(self):
        params = single_layer_params(np.eye(2), np.zeros(2),
                                     np.eye(2), np.zeros(2))
        npt.assert_allclose(encode([0.0, math.log(3)], params), [0.5, 0.75],
                            atol=1e-15)

    def test_two_layer_hand_chain(self):
        # Oracle: chain sigma(affine) by hand with math.exp.
        W1, b1 = np.array([[1.0, -1.0], [0.5, 2.0]]), np.array([0.1, -0.2])
        W2, b2 = np.array([[2.0, 0.0], [-1.0, 1.0]]), np.array([0.0, 0.3])
        params = AutoencoderParams(
            [Layer(W1, b1), Layer(W2, b2)],
            [Layer(np.zeros((2, 2)), np.zeros(2))],
        )
        x = [1.0, 0.0]
        a1 = [_sigma(1.0 * 1 + -1.0 * 0 + 0.1), _sigma(0.5 * 1 + 2.0 * 0 - 0.2)]
        expected = [_sigma(2.0 * a1[0] + 0.0 * a1[1] + 0.0),
                    _sigma(-1.0 * a1[0] + 1.0 * a1[1] + 0.3)]
        npt.assert_allclose(encode(x, params), expected, atol=1e-15)

    def test_outputs_in_unit_interval(self, rng):
        params = AutoencoderParams(
            [Layer(rng.normal((4, 6)), rng.normal((4,)))],
            [Layer(rng.normal((6, 4)), rng.normal((6,)))],
        )
        h = encode(rng.normal((10, 6)), params)
        assert np.all((h > 0) & (h < 1))

    def test_shape_mismatch(self):
        params = single_layer_params(np.eye(2), np.zeros(2),
                                     np.eye(2), np.zeros(2))
        with pytest.raises(ShapeError):
            encode([1.0, 2.0, 3.0], params)


class TestDecode:
    def test_zero_weights_give_half(self):
        params = single_layer_params(np.zeros((2, 3)), np.zeros(2),
                                     np.zeros((3, 2)), np.zeros(3))
        npt.assert_array_equal(decode([0.9, 0.1], params), [0.5, 0.5, 0.5])

    def test_roundtrip_shape(self, rng):
        params = AutoencoderParams(
            [Layer(rng.normal((3, 5)), rng.normal((3,)))],
            [Layer(rng.normal((5, 3)), rng.normal((5,)))],
        )
        x = rng.normal((5,))
        assert decode(encode(x, params), params).shape == (5,)

    def test_single_layer_matches_sigma_affine(self):
        W, b = np.array([[0.3, -0.7], [1.1, 0.2], [0.0, 0.5]]), np.array([0.1, 0.0, -0.4])
        params = AutoencoderParams(
            [Layer(np.zeros((2, 3)), np.zeros(2))], [Layer(W, b)])
        h = [0.25, 0.8]
        expected = [_sigma(W[i] @ h + b[i]) for i in range(3)]
        npt.assert_allclose(decode(h, params), expected, atol=1e-15)


class TestReconstructionLoss:
    def test_perfect_reconstruction(self):
        assert reconstruction_loss([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_unit_differences(self):
        assert reconstruction_loss([1.0, 1.0], [0.0, 0.0]) == 2.0

    def test_batch_mean(self):
        # per-sample losses 1 and 4 -> mean 2.5
        x_in = np.array([[1.0, 0.0], [0.0, 0.0]])
        x_rec = np.array([[0.0, 0.0], [0.0, 2.0]])
        assert reconstruction_loss(x_in, x_rec) == 2.5

    def test_symmetric(self, rng):
        a, b = rng.normal((6,)), rng.normal((6,))
        assert reconstruction_loss(a, b) == reconstruction_loss(b, a)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            reconstruction_loss([1.0, 2.0], [1.0, 2.0, 3.0])

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=8),
           st.integers(0, 2 ** 32 - 1))
    def test_nonnegative_zero_iff_equal(self, vec, seed):
        x = np.array(vec)
        loss_self = reconstruction_loss(x, x)
        assert loss_self == 0.0
        noise = Rng(seed).normal(x.shape, 0.5)
        if np.any(noise != 0):
            assert reconstruction_loss(x, x + noise) > 0.0


class TestParamsValidation:
    def test_mismatched_chain_rejected(self):
        with pytest.raises(ShapeError, match="chain"):
            AutoencoderParams(
                [Layer(np.zeros((3, 4)), np.zeros(3))],
                [Layer(np.zeros((4, 2)), np.zeros(4))],
            )

    def test_decoder_must_return_to_input_width(self):
        with pytest.raises(ShapeError, match="width"):
            AutoencoderParams(
                [Layer(np.zeros((2, 4)), np.zeros(2))],
                [Layer(np.zeros((3, 2)), np.zeros(3))],
            )

    def test_deterministic_inference(self, rng):
        params = AutoencoderParams(
            [Layer(rng.normal((2, 4)), rng.normal((2,)))],
            [Layer(rng.normal((4, 2)), rng.normal((4,)))],
        )
        x = rng.normal((4,))
        npt.assert_array_equal(encode(x, params), encode(x, params))
