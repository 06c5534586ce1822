import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spfbench.errors import ConfigError, DimensionError
from spfbench.nn import grad_check
from spfbench.surrogate import (OneStepMlp, RolloutConfig, Seq2SeqLstm, advance_window,
                                advance_window_grad, build_model, compose_delta, model_from_arrays,
                                model_to_arrays, predict_one, predict_seq, rollout)


def mlp_oracle(model, x):
    for layer in model.layers:
        z = np.array([sum(layer.weight[i, j] * x[j] for j in range(layer.n_in)) + layer.bias[i]
                      for i in range(layer.n_out)])
        x = np.tanh(z) if layer.activation == "tanh" else z
    return x


class TestOneStep:
    def test_identity(self, rng):
        eta = rng.normal(size=5)
        assert np.array_equal(predict_one(OneStepMlp.identity(5), eta), eta)

    def test_zero_net(self, rng):
        f = OneStepMlp.linear(np.zeros((4, 4)))
        assert np.array_equal(predict_one(f, rng.normal(size=4)), np.zeros(4))

    def test_matches_layer_oracle(self, rng):
        f = OneStepMlp(4, (6, 5), rng=rng)
        eta = rng.normal(size=4)
        assert np.allclose(predict_one(f, eta), mlp_oracle(f, eta), rtol=0, atol=1e-14)

    def test_dimension_error(self, rng):
        with pytest.raises(DimensionError):
            predict_one(OneStepMlp(4, rng=rng), np.ones(3))

    def test_predict_one_rejects_seq2seq(self, rng):
        with pytest.raises(ConfigError):
            predict_one(Seq2SeqLstm(3, 4, 2, 2, rng=rng), np.ones(3))

    def test_batch_shapes(self, rng):
        f = OneStepMlp(3, (4,), rng=rng)
        assert f(np.ones(3)).shape == (3,)
        assert f(np.ones((1, 3))).shape == (1, 3)
        assert f(np.ones((5, 1, 3))).shape == (5, 1, 3)

    def test_backward_fd(self, rng):
        f = OneStepMlp(3, (4,), rng=rng)
        x = rng.normal(size=(2, 1, 3))
        w = rng.normal(size=(2, 1, 3))

        def fn(model):
            y, c = model.forward(x)
            return float(np.sum(y * w)), model.backward(c, w)[1]

        assert grad_check(f, fn).max_rel_error <= 1e-5


class TestSeq2Seq:
    def test_zero_model(self, rng):
        f = Seq2SeqLstm.zeros(4, 5, 3, 3)
        assert np.array_equal(predict_seq(f, rng.normal(size=(3, 4))), np.zeros((3, 4)))

    def test_three_to_three(self, rng):
        f = Seq2SeqLstm(6, 8, 3, 3, rng=rng)
        assert predict_seq(f, rng.normal(size=(3, 6))).shape == (3, 6)

    def test_window_length_error(self, rng):
        f = Seq2SeqLstm(6, 8, 3, 3, rng=rng)
        with pytest.raises(DimensionError):
            predict_seq(f, rng.normal(size=(2, 6)))

    def test_sum_output_gradient_fd(self, rng):
        f = Seq2SeqLstm(3, 4, 3, 3, rng=rng)
        x = rng.normal(size=(3, 3))

        def fn(model):
            y, c = model.forward(x)
            return float(y.sum()), model.backward(c, np.ones_like(y))[1]

        assert grad_check(f, fn).max_rel_error <= 1e-4

    def test_k2_gradient_fd(self, rng):
        f = Seq2SeqLstm(3, 5, 2, 2, rng=rng)
        x = rng.normal(size=(4, 2, 3))
        t = rng.normal(size=(4, 2, 3))

        def fn(model):
            y, c = model.forward(x)
            return float(np.sum((y - t) ** 2)), model.backward(c, 2 * (y - t))[1]

        assert grad_check(f, fn).max_rel_error <= 1e-4

    def test_window_gradient_fd(self, rng):
        f = Seq2SeqLstm(2, 3, 2, 3, rng=rng)
        x = rng.normal(size=(2, 2))
        w = rng.normal(size=(3, 2))
        y, c = f.forward(x)
        dx, _ = f.backward(c, w)
        for idx in np.ndindex(x.shape):
            e = np.zeros_like(x)
            e[idx] = 1e-6
            num = (np.sum(f(x + e) * w) - np.sum(f(x - e) * w)) / 2e-6
            assert abs(num - dx[idx]) <= 1e-8

    def test_batch_rows_independent(self, rng):
        f = Seq2SeqLstm(3, 4, 2, 2, rng=rng)
        x = rng.normal(size=(5, 2, 3))
        yb = f(x)
        for i in range(5):
            assert np.allclose(yb[i], f(x[i]), rtol=0, atol=1e-14)


class TestRollout:
    def test_identity_fixed_point(self):
        c = np.array([1.0, -2.0, 0.5])
        preds = rollout(OneStepMlp.identity(3), RolloutConfig(10, c))
        assert np.array_equal(preds, np.tile(c, (10, 1)))

    def test_horizon_one(self, rng):
        f = OneStepMlp(3, (4,), rng=rng)
        eta = rng.normal(size=3)
        assert np.array_equal(rollout(f, RolloutConfig(1, eta))[0], predict_one(f, eta))
        g = Seq2SeqLstm(3, 4, 3, 3, rng=rng)
        w = rng.normal(size=(3, 3))
        assert np.array_equal(rollout(g, RolloutConfig(1, w))[0], predict_seq(g, w)[0])

    def test_two_chained_calls(self, rng):
        g = Seq2SeqLstm(4, 6, 3, 3, rng=rng)
        w = rng.normal(size=(3, 4))
        first = predict_seq(g, w)
        second = predict_seq(g, first)
        assert np.array_equal(rollout(g, RolloutConfig(6, w)), np.concatenate([first, second]))

    def test_horizon_error(self):
        with pytest.raises(ConfigError):
            RolloutConfig(0, np.ones(3))

    def test_teacher_shape_error(self, rng):
        with pytest.raises(DimensionError):
            rollout(Seq2SeqLstm(3, 4, 3, 3, rng=rng), RolloutConfig(3, np.ones((2, 3))))

    def test_truncates_partial_window(self, rng):
        g = Seq2SeqLstm(3, 4, 3, 3, rng=rng)
        w = rng.normal(size=(3, 3))
        assert rollout(g, RolloutConfig(7, w)).shape == (7, 3)
        assert np.array_equal(rollout(g, RolloutConfig(7, w)), rollout(g, RolloutConfig(9, w))[:7])

    def test_contractive_norm_decreases(self, rng):
        A = rng.normal(size=(4, 4))
        A = 0.9 * A / np.linalg.norm(A, 2)
        preds = rollout(OneStepMlp.linear(A), RolloutConfig(30, rng.normal(size=4)))
        norms = np.linalg.norm(preds, axis=1)
        assert np.all(np.diff(norms) <= 1e-15)


class TestCompose:
    def test_delta_zero(self, rng):
        eta = rng.normal(size=3)
        assert np.array_equal(compose_delta(OneStepMlp(3, rng=rng), eta, 0), eta)

    def test_delta_one(self, rng):
        f = OneStepMlp(3, (5,), rng=rng)
        eta = rng.normal(size=3)
        assert np.array_equal(compose_delta(f, eta, 1), predict_one(f, eta))

    def test_delta_three(self, rng):
        f = OneStepMlp(3, (5,), rng=rng)
        eta = rng.normal(size=3)
        assert np.array_equal(compose_delta(f, eta, 3), f(f(f(eta))))

    def test_window_model(self, rng):
        g = Seq2SeqLstm(3, 4, 3, 3, rng=rng)
        w = rng.normal(size=(3, 3))
        assert np.array_equal(compose_delta(g, w, 2), g(g(w)))

    def test_negative(self, rng):
        with pytest.raises(ConfigError):
            compose_delta(OneStepMlp(2, rng=rng), np.ones(2), -1)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 1000))
    def test_semigroup(self, a, b, seed):
        r = np.random.default_rng(seed)
        f = OneStepMlp(3, (4,), rng=r)
        eta = r.normal(size=3)
        lhs = compose_delta(f, eta, a + b)
        rhs = compose_delta(f, compose_delta(f, eta, a), b)
        assert lhs.tobytes() == rhs.tobytes()


class TestWindowShift:
    def test_advance_shorter_output(self):
        w = np.arange(6.0).reshape(3, 2)
        out = np.array([[10.0, 11.0]])
        assert np.array_equal(advance_window(w, out), [[2, 3], [4, 5], [10, 11]])

    def test_advance_grad_is_adjoint(self, rng):
        for k_in, k_out in ((3, 1), (3, 3), (2, 4)):
            w = rng.normal(size=(k_in, 2))
            o = rng.normal(size=(k_out, 2))
            g = rng.normal(size=(k_in, 2))
            dw, do = advance_window_grad(g, k_in, k_out)
            # <g, A(w, o)> = <dw, w> + <do, o> for the linear shift A
            assert np.isclose(np.sum(g * advance_window(w, o)), np.sum(dw * w) + np.sum(do * o))


def test_serialisation_round_trip(rng):
    for f in (OneStepMlp(3, (4,), rng=rng), Seq2SeqLstm(3, 4, 2, 2, rng=rng)):
        spec, arrays = model_to_arrays(f)
        g = model_from_arrays(spec, arrays)
        x = rng.normal(size=(f.k_in, 3))
        assert np.array_equal(f(x), g(x))
        assert f.fingerprint() == g.fingerprint()


def test_build_model_unknown():
    with pytest.raises(ConfigError):
        build_model({"kind": "transformer", "m": 3})


def test_forward_deterministic(rng):
    g = Seq2SeqLstm(5, 7, 3, 3, rng=rng)
    w = rng.normal(size=(3, 5))
    assert g(w).tobytes() == g(w).tobytes()
