import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compfs import autodiff as ad
from compfs.autodiff import Tensor, backward
from compfs.gates import (PI_EPS, GateBank, gate, hard_select, relaxed_gated_input,
                          sample_logistic, sample_relaxed_gate)

from conftest import central_diff, max_rel_err

interior = st.floats(1e-4, 1 - 1e-4)


def test_relaxed_gate_examples():
    assert sample_relaxed_gate([0.5], [0.5], 0.1).data[0] == pytest.approx(0.5)
    assert sample_relaxed_gate([0.5], [0.5], 7.0).data[0] == pytest.approx(0.5)
    m = sample_relaxed_gate([0.9], [0.5], 0.1).data[0]
    assert 1 - m == pytest.approx(1 / (1 + np.exp(10 * np.log(9))), rel=1e-6)
    assert 1 - m == pytest.approx(2.9e-10, rel=0.05)
    assert sample_relaxed_gate([0.5], [0.9], 1.0).data[0] == pytest.approx(0.9)


@pytest.mark.parametrize("pi,u,tau", [([0.0], [0.5], 0.1), ([1.0], [0.5], 0.1),
                                      ([0.5], [0.0], 0.1), ([0.5], [1.0], 0.1),
                                      ([0.5], [0.5], 0.0)])
def test_relaxed_gate_rejects_boundary(pi, u, tau):
    with pytest.raises(ValueError):
        sample_relaxed_gate(pi, u, tau)


@settings(max_examples=100, deadline=None)
@given(interior, interior, interior, st.floats(0.05, 5.0))
def test_relaxed_gate_monotone_in_pi(p1, p2, u, tau):
    lo, hi = sorted((p1, p2))
    a = sample_relaxed_gate([lo], [u], tau).data[0]
    b = sample_relaxed_gate([hi], [u], tau).data[0]
    assert a <= b


def test_low_temperature_limit():
    rng = np.random.default_rng(0)
    pi = rng.uniform(0.05, 0.95, 200)
    u = rng.uniform(0.05, 0.95, 200)
    keep = np.abs(np.log(pi / (1 - pi)) + np.log(u / (1 - u))) > 1e-3
    hard = (np.log(pi / (1 - pi)) + np.log(u / (1 - u)) > 0).astype(float)
    for tau in (1e-4, 1e-6):
        m = sample_relaxed_gate(pi[keep], u[keep], tau).data
        np.testing.assert_allclose(m, hard[keep], atol=1e-3)


def test_monte_carlo_switching_probability():
    # P(m > 1/2) = pi at any temperature; the mean equals pi only at pi = 1/2
    rng = np.random.default_rng(1)
    for tau in (1.0, 0.1):
        for pi in (0.1, 0.3, 0.5, 0.75):
            u = rng.uniform(1e-12, 1 - 1e-12, 100_000)
            m = sample_relaxed_gate(np.full_like(u, pi), u, tau).data
            assert abs((m > 0.5).mean() - pi) < 0.01
            if pi == 0.5:
                assert abs(m.mean() - 0.5) < 0.01


def test_gate_examples():
    x, xbar = np.array([[2.0, 4.0]]), np.zeros(2)
    np.testing.assert_allclose(gate(x, np.ones(2), xbar).data, x)
    np.testing.assert_allclose(gate(x, np.zeros(2), [7.0, -1.0]).data, [[7.0, -1.0]])
    np.testing.assert_allclose(gate(x, [0.5, 1.0], xbar).data, [[1.0, 4.0]])


def test_hard_select_examples():
    assert hard_select([0.9, 0.5, 0.71], 0.7) == {0, 2}
    assert hard_select([0.5] * 4, 0.7) == set()
    assert hard_select([0.7], 0.7) == set()
    with pytest.raises(ValueError):
        hard_select([0.5], 1.0)


def test_logistic_noise_matches_uniform_stream():
    a = sample_logistic(np.random.default_rng(3), (4, 5))
    u = np.clip(np.random.default_rng(3).random((4, 5)), 1e-7, 1 - 1e-7)
    np.testing.assert_allclose(a, np.log(u / (1 - u)), rtol=1e-12)


@pytest.mark.parametrize("param", ["logit", "prob"])
def test_fused_gate_matches_composed_ops(param, rng):
    n, b, p = 3, 4, 6
    raw = rng.uniform(-2, 2, (n, p))
    value = raw if param == "logit" else ad.np_sigmoid(raw)
    u = rng.uniform(0.01, 0.99, (n, b, p))
    x, xbar = rng.normal(size=(b, p)), rng.normal(size=p)
    w = rng.normal(size=(n, b, p))

    t1 = Tensor(value.copy(), requires_grad=True)
    out = relaxed_gated_input(t1, np.log(u / (1 - u)), x, xbar, 0.3, param)
    backward(ad.tsum(ad.mul(out, w)))

    t2 = Tensor(value.copy(), requires_grad=True)
    pi = ad.sigmoid(t2) if param == "logit" else t2
    ref = gate(x, sample_relaxed_gate(ad.reshape(pi, (n, 1, p)), u, 0.3), xbar)
    backward(ad.tsum(ad.mul(ref, w)))

    np.testing.assert_allclose(out.data, ref.data, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(t1.grad, t2.grad, rtol=1e-8, atol=1e-12)

    def f():
        return float(np.sum(relaxed_gated_input(t1, np.log(u / (1 - u)), x, xbar, 0.3,
                                                param).data * w))
    assert max_rel_err(t1.grad, central_diff(f, t1.data, h=1e-6)) < 1e-4


@pytest.mark.parametrize("param", ["logit", "prob"])
def test_gate_bank_init_and_projection(param, rng):
    bank = GateBank.init(3, 8, np.zeros(8), rng, parameterization=param)
    pi = bank.probs_numpy()
    assert pi.shape == (3, 8)
    assert np.all(np.abs(pi - 0.5) < 0.026)
    assert bank.selections() == [frozenset()] * 3
    with pytest.raises(ValueError):
        bank.x_mean[0] = 1.0
    bank.param.data[0, 0] = 2.0
    bank.param.data[1, 1] = -1.0
    bank.project()
    if param == "prob":
        assert bank.param.data[0, 0] == 1 - PI_EPS and bank.param.data[1, 1] == PI_EPS
        assert bank.selections()[0] == {0}


def test_gate_bank_sample_shapes(rng):
    bank = GateBank.init(2, 5, np.zeros(5), rng, parameterization="prob")
    assert bank.sample(7, rng).shape == (2, 7, 5)
    assert bank.sample_gated(np.ones((7, 5)), rng).shape == (2, 7, 5)
    with pytest.raises(ValueError):
        GateBank.init(2, 5, np.zeros(5), rng, parameterization="softmax")
