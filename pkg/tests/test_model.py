import numpy as np
import pytest

from compfs import autodiff as ad
from compfs.model import PARAM_NAMES, CompFSModel, ModelConfig


def make(n=3, p=6, seed=0, **kw):
    cfg = ModelConfig(n_features=p, n_groups=n, hidden=5, **kw)
    return CompFSModel(cfg, np.zeros(p), np.random.default_rng(seed))


def set_probs(model, pi):
    model.gates.param.data[...] = pi


def test_zero_aggregator_gives_zero_logits(rng):
    m = make(n=1)
    m.params["agg_w"].data[...] = 0.0
    m.params["agg_b"].data[...] = 0.0
    ens, _ = m.forward_eval(rng.normal(size=(4, 6)))
    assert np.all(ens == 0.0)


def test_opposite_learners_cancel(rng):
    m = make(n=2)
    for name in ("enc_w1", "enc_b1", "enc_w2", "enc_b2", "enc_w3", "enc_b3"):
        m.params[name].data[1] = m.params[name].data[0]
    m.params["agg_w"].data[1] = -m.params["agg_w"].data[0]
    m.params["agg_b"].data[...] = 0.0
    set_probs(m, 0.9)
    ens, _ = m.forward_eval(rng.normal(size=(5, 6)))
    np.testing.assert_allclose(ens, 0.0, atol=1e-14)


def test_learner_permutation_invariance(rng):
    m = make(n=4)
    set_probs(m, rng.uniform(0.6, 0.8, (4, 6)))
    x = rng.normal(size=(7, 6))
    before, groups_before = m.forward_eval(x)
    perm = np.array([2, 0, 3, 1])
    for t in m.params.values():
        t.data = t.data[perm].copy()
    m.gates.param = m.params["gate_param"]
    after, groups_after = m.forward_eval(x)
    np.testing.assert_allclose(after, before, rtol=1e-13, atol=1e-13)
    np.testing.assert_array_equal(groups_after, groups_before[perm])


def test_closed_gates_give_constant_logits(rng):
    m = make()
    set_probs(m, 0.5)
    ens, grp = m.forward_eval(rng.normal(size=(6, 6)))
    assert np.allclose(ens, ens[0]) and np.allclose(grp, grp[:, :1])


def test_open_gates_equal_ungated_pass(rng):
    m = make()
    set_probs(m, 0.95)
    x = rng.normal(size=(6, 6))
    ens, grp = m.forward_eval(x)
    ref_ens, ref_grp = m._pipeline(ad.Tensor(np.broadcast_to(x, (3, 6, 6)).copy()))
    np.testing.assert_array_equal(ens, ref_ens.data)
    np.testing.assert_array_equal(grp, ref_grp.data)


def test_eval_is_deterministic_and_train_is_stochastic(rng):
    m = make()
    x = rng.normal(size=(6, 6))
    a, b = m.forward_eval(x), m.forward_eval(x)
    assert np.array_equal(a[0], b[0])
    e1 = m.forward_train(x, np.random.default_rng(1))[0].data
    e2 = m.forward_train(x, np.random.default_rng(2))[0].data
    assert not np.array_equal(e1, e2)


def test_discovered_groups_dedup_and_drop_empty():
    m = make(n=4, p=5)
    pi = np.full((4, 5), 0.1)
    pi[0, [1, 2]] = pi[2, [1, 2]] = 0.9
    pi[3, 3] = 0.8
    set_probs(m, pi)
    assert m.discovered_groups() == frozenset({frozenset({1, 2}), frozenset({3})})
    set_probs(m, 0.2)
    assert m.discovered_groups() == frozenset()


def test_single_learner_shapes(rng):
    m = make(n=1)
    ens, grp, pi = m.forward_train(rng.normal(size=(3, 6)), rng)
    assert ens.shape == (3, 2) and grp.shape == (1, 3, 2) and pi.shape == (1, 6)


def test_shape_errors(rng):
    m = make()
    with pytest.raises(ad.ShapeError):
        m.forward_eval(rng.normal(size=(3, 5)))
    with pytest.raises(ad.ShapeError):
        CompFSModel(ModelConfig(n_features=6), np.zeros(5), rng)


def test_fixed_mask_freezes_gates(rng):
    cfg = ModelConfig(n_features=4, n_groups=1, hidden=3)
    m = CompFSModel(cfg, np.zeros(4), rng, fixed_mask=[[1, 0, 1, 0]])
    assert m.params["gate_param"] not in m.trainable()
    assert m.discovered_groups() == frozenset({frozenset({0, 2})})


@pytest.mark.parametrize("fixed", [False, True])
def test_checkpoint_round_trip(tmp_path, rng, fixed):
    cfg = ModelConfig(n_features=6, n_groups=1 if fixed else 3, hidden=4, gate_param="logit")
    mask = np.array([[1, 1, 0, 0, 0, 0]]) if fixed else None
    m = CompFSModel(cfg, rng.normal(size=6), rng, fixed_mask=mask)
    path = tmp_path / "model.npz"
    m.save(path)
    back = CompFSModel.load(path)
    assert back.config == m.config
    for name in PARAM_NAMES:
        assert np.array_equal(back.params[name].data, m.params[name].data)
    assert np.array_equal(back.gates.x_mean, m.gates.x_mean)
    x = rng.normal(size=(5, 6))
    assert np.array_equal(back.forward_eval(x)[0], m.forward_eval(x)[0])


def test_learner_view_matches_stacked_params():
    m = make()
    view = m.learner(1)
    assert np.array_equal(view.encoder[0][0], m.params["enc_w1"].data[1])
    assert np.array_equal(view.selection_probs, m.selection_probs()[1])
