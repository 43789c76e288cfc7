import numpy as np
import pytest

from rgrl.layers import Conv2d, ConvTranspose2d, Dense, conv_output_size, same_padding


def test_output_size_and_padding():
    assert conv_output_size(28, 2) == 14
    assert conv_output_size(7, 2) == 4
    assert same_padding(28, 5, 2) == (1, 2)
    assert same_padding(4, 3, 1) == (1, 1)


def test_dense_forward():
    layer = Dense(2, 1, np.random.default_rng(0))
    layer.params["W"][...] = [[2.0, -1.0]]
    layer.params["b"][...] = [0.5]
    np.testing.assert_allclose(layer.forward(np.array([[1.0], [3.0]])), [[-0.5]])


def test_conv_identity_kernel():
    rng = np.random.default_rng(0)
    conv = Conv2d(1, 1, (1, 1), 1, rng)
    conv.params["W"][...] = 1.0
    x = rng.standard_normal((2, 5, 5, 1))
    np.testing.assert_allclose(conv.forward(x), x)


def test_conv_stride_two_shape():
    conv = Conv2d(3, 4, (3, 3), 2, np.random.default_rng(0))
    assert conv.forward(np.zeros((2, 7, 9, 3))).shape == (2, 4, 5, 4)


@pytest.mark.parametrize("hw,kernel,stride", [((7, 7), (3, 3), 2), ((6, 5), (5, 3), 2), ((4, 4), (3, 3), 1)])
def test_transpose_is_adjoint(hw, kernel, stride):
    rng = np.random.default_rng(1)
    conv = Conv2d(2, 3, kernel, stride, rng)
    deconv = ConvTranspose2d(3, 2, kernel, stride, hw, rng)
    deconv.params["W"][...] = conv.params["W"]
    conv.params["b"][...] = 0.0
    deconv.params["b"][...] = 0.0
    x = rng.standard_normal((2, *hw, 2))
    y = conv.forward(x)
    u = rng.standard_normal(y.shape)
    assert np.sum(y * u) == pytest.approx(np.sum(x * deconv.forward(u)), rel=1e-12)
