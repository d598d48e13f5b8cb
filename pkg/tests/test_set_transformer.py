import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from aided_nav import tensor_ad as ad
from aided_nav.errors import ConfigError, NavDataError
from aided_nav.set_transformer import (StHyperParams, StWeights, TrainingWindow, evaluate_loss, forward,
                                       forward_batch, imu_window, patch_embed, persistence_loss, pma,
                                       predict_outage_sequence, sab, split_indices, stack_windows, train)
from aided_nav.strapdown import ImuStream
from aided_nav.tensor_ad import Tensor


@pytest.fixture
def hp():
    return StHyperParams(D=8, b=1, h=2, FFE=16, k=2, alpha=20, beta=10, m_imu=40, dropout_p=0.0,
                         batch_size=4, epochs=3, learning_rate=1e-2, residual_head=True,
                         head_init_gain=0.01)


@pytest.fixture
def weights(hp):
    return StWeights.init(hp, seed=0)


def _windows(hp, n=12, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        dvl = rng.normal([1.5, 0.0, 0.0], 0.1, size=(hp.n_dvl, 3))
        imu = rng.normal(0.0, 0.1, size=(hp.m_imu, 6))
        imu[:, 2] -= 9.8
        out.append(TrainingWindow(dvl, imu, dvl[-1] + np.array([0.05, 0.0, 0.0]), float(i)))
    return out


class Test_StHyperParams:
    def test_published_defaults(self):
        hp = StHyperParams.preset("published")
        assert (hp.alpha, hp.beta, hp.D, hp.b, hp.h, hp.FFE, hp.k) == (200, 100, 128, 16, 2, 256, 3)
        assert hp.n_patches_imu == 3
        assert hp.n_patches_dvl == 1
        assert hp.d == hp.D

    def test_paper_alias(self):
        assert StHyperParams.preset("paper") == StHyperParams.preset("published")
        assert StHyperParams.preset("paper", epochs=3).epochs == 3

    def test_toy_preset_with_override(self):
        hp = StHyperParams.preset("toy", epochs=7)
        assert hp.D == 16
        assert hp.epochs == 7

    @pytest.mark.parametrize("kwargs", [
        {"D": 10, "h": 3},
        {"dropout_p": 1.0},
        {"momentum": 1.0},
        {"b": 0},
        {"d": 64},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            StHyperParams(**kwargs)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            StHyperParams.preset("huge")

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ConfigError):
            StHyperParams.from_dict({"D": 8, "heads": 2})


class Test_blocks:
    def test_sab_is_permutation_equivariant(self, hp, weights):
        X = np.random.default_rng(1).normal(size=(5, hp.D))
        perm = np.array([3, 0, 4, 1, 2])
        with ad.no_grad():
            out = sab(Tensor(X), weights, "imu.enc0", hp).data
            out_perm = sab(Tensor(X[perm]), weights, "imu.enc0", hp).data
        assert_allclose(out_perm, out[perm], atol=1e-12)

    def test_pma_is_permutation_invariant(self, hp, weights):
        X = np.random.default_rng(2).normal(size=(6, hp.D))
        with ad.no_grad():
            out = pma(Tensor(X), weights, "imu.pma", hp).data
            out_perm = pma(Tensor(X[::-1].copy()), weights, "imu.pma", hp).data
        assert out.shape == (hp.k, hp.D)
        assert_allclose(out_perm, out, atol=1e-12)

    def test_batched_blocks_match_unbatched(self, hp, weights):
        X = np.random.default_rng(3).normal(size=(2, 4, hp.D))
        with ad.no_grad():
            batched = sab(Tensor(X), weights, "dvl.enc0", hp).data
            single = sab(Tensor(X[1]), weights, "dvl.enc0", hp).data
        assert_allclose(batched[1], single, atol=1e-12)

    def test_patch_embed_shapes(self, hp, weights):
        with ad.no_grad():
            assert patch_embed(Tensor(np.zeros((hp.m_imu, 6))), weights, "imu", hp).shape == (3, hp.D)
            assert patch_embed(Tensor(np.zeros((5, hp.m_imu, 6))), weights, "imu", hp).shape == (5, 3, hp.D)
            assert patch_embed(Tensor(np.zeros((hp.n_dvl, 3))), weights, "dvl", hp).shape == (1, hp.D)

    def test_patch_embed_too_short(self, hp, weights):
        with pytest.raises(NavDataError):
            patch_embed(Tensor(np.zeros((10, 6))), weights, "imu", hp)


class Test_forward:
    def test_output_shape(self, hp, weights):
        windows = _windows(hp, n=3)
        assert forward(windows[0], weights).shape == (3,)
        with ad.no_grad():
            assert forward_batch(stack_windows(windows), weights, hp).shape == (3, 3)

    def test_residual_head_starts_near_persistence(self, hp, weights):
        window = _windows(hp, n=1)[0]
        assert_allclose(forward(window, weights), window.dvl_past[-1], atol=0.05)

    def test_inference_is_deterministic(self, hp):
        hp.dropout_p = 0.5
        w = StWeights.init(hp, seed=4)
        window = _windows(hp, n=1)[0]
        assert_allclose(forward(window, w), forward(window, w))

    def test_gradients_match_finite_differences(self, hp, weights, numeric_grad):
        batch = stack_windows(_windows(hp, n=3))
        target = Tensor(batch.target)

        def loss_value():
            with ad.no_grad():
                return float(ad.mse_loss(forward_batch(batch, weights, hp), target).data)

        weights.zero_grad()
        ad.backward(ad.mse_loss(forward_batch(batch, weights, hp), target))
        for name in ("head.fc2.w", "head.fc1.b", "imu.enc0.q.w", "imu.pma.seeds", "dvl.pe.w",
                     "dvl.dec0.ln1.g"):
            t = weights[name]
            assert t.grad is not None, name
            assert_allclose(t.grad, numeric_grad(loss_value, t.data), rtol=1e-4, atol=1e-9,
                            err_msg=name)


class Test_persistence:
    def test_save_load_round_trip(self, hp, weights, tmp_path):
        windows = _windows(hp, n=5)
        weights.set_normalization(stack_windows(windows))
        path = tmp_path / "weights.json"
        weights.save(str(path), config_hash="abc")
        loaded = StWeights.load(str(path))
        assert loaded.hp == hp
        assert evaluate_loss(loaded, windows) == evaluate_loss(weights, windows)
        assert not loaded["norm.imu.std"].requires_grad

    def test_wrong_format(self, weights):
        doc = weights.to_document()
        doc["format"] = "something-else"
        with pytest.raises(NavDataError):
            StWeights.from_document(doc)

    def test_missing_tensor(self, weights):
        doc = weights.to_document()
        doc["tensors"] = [t for t in doc["tensors"] if t["name"] != "head.fc1.w"]
        with pytest.raises(NavDataError):
            StWeights.from_document(doc)

    def test_unreadable_file(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text("{not json")
        with pytest.raises(NavDataError):
            StWeights.load(str(path))


class Test_training:
    def test_split_indices(self):
        train_idx, val_idx = split_indices(100, seed=3)
        assert len(train_idx) == 75 and len(val_idx) == 25
        assert not set(train_idx) & set(val_idx)
        assert sorted(np.concatenate([train_idx, val_idx])) == list(range(100))
        again = split_indices(100, seed=3)
        assert_allclose(again[1], val_idx)

    def test_persistence_loss(self, hp):
        windows = _windows(hp, n=4)
        assert persistence_loss(windows) == pytest.approx(0.05**2 / 3)

    def test_zero_learning_rate_keeps_initial_weights(self, hp):
        hp.learning_rate = 0.0
        result = train(_windows(hp), hp, seed=9)
        init_seed = int(np.random.SeedSequence(9).spawn(2)[0].generate_state(1)[0])
        reference = StWeights.init(hp, init_seed)
        for name, t in reference.trainable():
            assert_allclose(result.weights[name].data, t.data, err_msg=name)
        assert result.best_epoch == 1

    def test_history_and_selection(self, hp):
        result = train(_windows(hp), hp, seed=2)
        assert [row["epoch"] for row in result.history] == [1, 2, 3]
        assert result.execution_log[0].startswith("Epoch 1/3")
        val = [row["val_loss"] for row in result.history]
        assert result.best_epoch == int(np.argmin(val)) + 1
        assert evaluate_loss(result.weights, [_windows(hp)[i] for i in result.val_indices]) == \
            pytest.approx(result.best_val_loss)

    def test_empty_dataset(self, hp):
        with pytest.raises(NavDataError):
            train([], hp, seed=0)

    def test_deterministic(self, hp):
        a = train(_windows(hp), hp, seed=5)
        b = train(_windows(hp), hp, seed=5)
        assert a.history == b.history

    @pytest.mark.slow
    def test_learns_constant_offset(self, hp):
        hp.epochs = 40
        result = train(_windows(hp, n=40), hp, seed=1)
        assert result.history[-1]["train_loss"] < 0.5 * result.history[0]["train_loss"]

    @pytest.mark.slow
    def test_toy_corpus_beats_persistence(self, toy_run):
        result = toy_run["result"]
        history = pd.DataFrame(result.history)
        assert len(history) == 50
        assert result.best_val_loss < history["persistence_val_loss"].iloc[0]
        smoothed = history["train_loss"].rolling(10).mean().dropna().to_numpy()
        # 1% slack for dropout jitter in the epoch means
        assert np.all(smoothed[1:] <= smoothed[:-1] * 1.01)
        assert smoothed[-1] < smoothed[0]


class Test_outage_bridging:
    @pytest.fixture
    def imu(self):
        t = np.arange(2001) / 100.0
        return ImuStream(t=t, f_b=np.tile([0.0, 0.0, -9.8], (len(t), 1)), omega_b=np.zeros((len(t), 3)))

    def test_imu_window(self, imu):
        window = imu_window(imu, 10.0, 400)
        assert window.shape == (400, 6)
        assert_allclose(window[:, 2], -9.8)

    def test_imu_window_too_early(self, imu):
        with pytest.raises(NavDataError):
            imu_window(imu, 2.0, 400)

    def test_recursive_predictions(self, imu):
        seen = []

        def predictor(dvl_past, imu_past, t):
            seen.append((dvl_past.copy(), imu_past.shape, t))
            return dvl_past[-1] + 1.0

        past = [np.full(3, v) for v in (1.0, 2.0, 3.0)]
        out = predict_outage_sequence(past, imu, None, t_init=10.0, t_duration=5.0, predictor=predictor,
                                      hp=StHyperParams.preset("toy"))
        assert [m.t for m in out] == [10.0, 11.0, 12.0, 13.0, 14.0]
        assert all(m.predicted and m.valid for m in out)
        assert_allclose([m.body_velocity[0] for m in out], [4.0, 5.0, 6.0, 7.0, 8.0])
        # the third call sees two of its own predictions
        assert_allclose(seen[2][0][:, 0], [3.0, 4.0, 5.0])
        assert seen[0][1] == (400, 6)

    def test_zero_duration(self, imu):
        assert predict_outage_sequence([np.zeros(3)] * 3, imu, None, 10.0, 0.0,
                                       predictor=lambda *a: np.zeros(3)) == []

    def test_not_enough_history(self, imu):
        with pytest.raises(NavDataError):
            predict_outage_sequence([np.zeros(3)] * 2, imu, None, 10.0, 3.0, predictor=lambda *a: np.zeros(3))

    def test_network_weights(self, hp, weights, imu):
        out = predict_outage_sequence([np.array([1.5, 0.0, 0.0])] * 3, imu, weights, 10.0, 3.0)
        assert len(out) == 3
        assert all(np.all(np.isfinite(m.body_velocity)) for m in out)
