import numpy as np
import pytest

from hierlearn.core import RngStream
from hierlearn import baselines as bl
from hierlearn.resnet import TrainConfig, empirical_risk


def _data(seed=0, n=30, d=4, k=2):
    gen = RngStream(seed).generator()
    X = gen.standard_normal((n, d))
    Y = gen.standard_normal((n, k))
    return X, Y


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        bl.KernelSpec(kind="nope")
    with pytest.raises(ValueError):
        bl.KernelSpec(kind="gaussian", h=0.0)
    with pytest.raises(ValueError):
        bl.KernelSpec(kind="conjugate")


def test_gaussian_gram_values():
    spec = bl.KernelSpec(kind="gaussian", h=2.0)
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    K = bl.kernel_gram(spec, X)
    assert K[0, 0] == pytest.approx(1.0)
    assert K[0, 1] == pytest.approx(np.exp(-0.5))
    assert np.allclose(K, K.T)


def test_arcsin_gram_and_zero_row():
    spec = bl.KernelSpec(kind="arcsin")
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    K = bl.kernel_gram(spec, X)
    assert K[0, 0] == pytest.approx(np.pi / 2)
    assert K[0, 1] == pytest.approx(0.0)
    with pytest.raises(bl.UndefinedKernelError):
        bl.kernel_gram(spec, np.array([[0.0, 0.0]]))


def test_kernel_regression_interpolates():
    X, Y = _data()
    spec = bl.KernelSpec(kind="gaussian", h=4.0)
    pred = bl.kernel_regress(spec, X, Y, ridge=1e-10)
    assert empirical_risk(pred, X, Y) < 1e-10


def test_kernel_predictor_roundtrip(tmp_path):
    X, Y = _data(seed=2)
    spec = bl.KernelSpec(kind="gaussian", h=4.0)
    pred = bl.kernel_regress(spec, X, Y, ridge=1e-8)
    path = str(tmp_path / "pred.bin")
    pred.save(path)
    loaded = bl.load_kernel_predictor(path)
    assert np.array_equal(pred.anchors, loaded.anchors)
    assert np.array_equal(pred.weights, loaded.weights)
    Xq = RngStream(3).generator().standard_normal((5, 4))
    assert np.allclose(pred(Xq), loaded(Xq), atol=1e-12)


def test_conjugate_gram_equals_feature_inner_products():
    net = bl.init_fc(4, 2, [10], RngStream(4), trainable="last")
    X, _ = _data(seed=5, n=8)
    K = bl.kernel_gram(bl.KernelSpec(kind="conjugate", net=net), X)
    Phi = net.hidden_features(X)
    assert np.allclose(K, Phi @ Phi.T, atol=1e-12)


def test_ntk_gram_matches_feature_contraction():
    net = bl.init_fc(3, 2, [6], RngStream(6), trainable="all")
    X, _ = _data(seed=7, n=5, d=3)
    K = bl.kernel_gram(bl.KernelSpec(kind="ntk", net=net), X)
    F = bl.ntk_features(net, X, "all")
    assert np.allclose(K, np.einsum("nkp,mkp->nm", F, F), atol=1e-12)
    assert np.all(np.linalg.eigvalsh(K) > -1e-8)


def test_fc_gradient_matches_finite_differences():
    net = bl.init_fc(4, 2, [8, 8], RngStream(8), trainable="all")
    X, Y = _data(seed=9, n=6)
    grads, _ = net.gradient(X, Y)
    h = 1e-6
    for l in range(len(net.weights)):
        W = net.weights[l]
        idx = (0, 0)
        orig = W[idx]
        W[idx] = orig + h
        up = empirical_risk(net, X, Y) / 2.0
        W[idx] = orig - h
        dn = empirical_risk(net, X, Y) / 2.0
        W[idx] = orig
        assert grads[l][idx] == pytest.approx((up - dn) / (2 * h),
                                              rel=1e-4, abs=1e-8)


def test_ntk_model_is_linear_in_delta():
    net = bl.init_fc(4, 2, [8, 8], RngStream(10), trainable="all")
    lin = bl.NTKLinearModel(net, trainable="all")
    gen = RngStream(11).generator()
    deltas = [0.1 * gen.standard_normal(W.shape) for W in net.weights]
    X = gen.standard_normal((5, 4))
    base = lin(X).copy()
    for l, D in enumerate(deltas):
        lin.delta[l][:] = D
    full = lin(X).copy()
    for l, D in enumerate(deltas):
        lin.delta[l][:] = 2.0 * D
    double = lin(X).copy()
    # affine in delta: f(2D) - f(0) = 2 (f(D) - f(0)) exactly
    assert np.allclose(double - base, 2.0 * (full - base), atol=1e-10)


def test_train_fc_reduces_risk():
    gen = RngStream(12).generator()
    X = gen.standard_normal((200, 5))
    Y = X[:, :1] - 0.5 * X[:, 1:2]
    net = bl.init_fc(5, 1, [32], RngStream(13), trainable="all")
    before = empirical_risk(net, X, Y)
    bl.train_fc(net, (X, Y), TrainConfig(eta_w=0.05, T=30, lr_drop_epoch=0),
                RngStream(14))
    assert empirical_risk(net, X, Y) < 0.1 * before


def test_train_ntk_reduces_risk():
    gen = RngStream(15).generator()
    X = gen.standard_normal((200, 5))
    Y = X[:, :1]
    net = bl.init_fc(5, 1, [32], RngStream(16), trainable="all")
    lin = bl.NTKLinearModel(net, trainable="all")
    before = empirical_risk(lin, X, Y)
    bl.train_ntk(lin, (X, Y), TrainConfig(eta_w=0.05, T=30, lr_drop_epoch=0),
                 RngStream(17))
    assert empirical_risk(lin, X, Y) < 0.1 * before


def test_conjugate_fit_is_exact_last_layer_optimum():
    X, Y = _data(seed=18, n=40)
    net = bl.init_fc(4, 2, [16], RngStream(19), trainable="last")
    fitted = bl.conjugate_fit(net, X, Y, ridge=1e-10)
    # any perturbation of the last layer cannot improve the training risk
    base = empirical_risk(fitted, X, Y)
    gen = RngStream(20).generator()
    for _ in range(5):
        probe = bl.FullyConnectedNet([W.copy() for W in fitted.weights],
                                     trainable="last")
        probe.weights[-1] = probe.weights[-1] + 1e-3 * gen.standard_normal(
            probe.weights[-1].shape)
        assert empirical_risk(probe, X, Y) >= base - 1e-12


def test_hidden_only_training_freezes_last_layer():
    net = bl.init_fc(4, 1, [8], RngStream(21), trainable="hidden")
    last_before = net.weights[-1].copy()
    X, Y = _data(seed=22, n=50, k=1)
    bl.train_fc(net, (X, Y), TrainConfig(eta_w=0.05, T=5, lr_drop_epoch=0),
                RngStream(23))
    assert np.array_equal(net.weights[-1], last_before)
    assert not np.array_equal(net.weights[0], net.init_weights[0])
