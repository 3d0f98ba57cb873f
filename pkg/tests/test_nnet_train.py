import numpy as np
import pytest

from gazerec.nnet import (
    CheckpointError,
    ConfigError,
    DatasetEmpty,
    DivergenceDetected,
    Network,
    TrainConfig,
    desk_spec,
    load_checkpoint,
    parse_train_config,
    save_checkpoint,
    train,
    write_curves,
)
from gazerec.nnet.train import batch_to_input


def two_color_classes(n, rng):
    """Trivially separable patches: reddish class 0, bluish class 1."""
    y = rng.integers(0, 2, size=n)
    X = rng.integers(0, 80, size=(n, 64, 64, 3), dtype=np.uint8)
    X[y == 0, :, :, 0] += 120
    X[y == 1, :, :, 2] += 120
    return X, y


@pytest.fixture(scope="module")
def toy_data():
    rng = np.random.default_rng(0)
    return two_color_classes(256, rng), two_color_classes(64, rng)


class TestTraining:
    def test_separable_toy_reaches_95(self, toy_data):
        (Xtr, ytr), (Xv, yv) = toy_data
        cfg = TrainConfig(max_iterations=2000, batch_size=32, seed=1,
                          val_interval=25, early_stop_accuracy=0.95,
                          precision="single")
        res = train(desk_spec(2), cfg, (Xtr, ytr), (Xv, yv))
        assert res.iterations_run <= 2000
        assert res.best_val_accuracy >= 0.95

    def test_deterministic_loss_curve(self, toy_data):
        (Xtr, ytr), _ = toy_data
        cfg = TrainConfig(max_iterations=12, batch_size=16, seed=7,
                          precision="double")
        r1 = train(desk_spec(2), cfg, (Xtr, ytr))
        r2 = train(desk_spec(2), cfg, (Xtr, ytr))
        assert r1.loss_curve == r2.loss_curve  # bitwise identical

    def test_lr_halves_at_period(self, toy_data):
        (Xtr, ytr), _ = toy_data
        cfg = TrainConfig(max_iterations=12, batch_size=8, seed=2,
                          lr_halving_period=5, base_lr=0.008, precision="single")
        res = train(desk_spec(2), cfg, (Xtr, ytr))
        lrs = [lr for _, _, lr in res.loss_curve]
        assert lrs[:5] == [0.008] * 5
        assert lrs[5:10] == pytest.approx([0.004] * 5)
        assert lrs[10:] == pytest.approx([0.002] * 2)

    def test_empty_dataset(self):
        cfg = TrainConfig(max_iterations=5)
        with pytest.raises(DatasetEmpty):
            train(desk_spec(2), cfg, (np.zeros((0, 64, 64, 3), np.uint8), np.zeros(0, np.int64)))

    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_divergence_detected(self, toy_data):
        (Xtr, ytr), _ = toy_data
        cfg = TrainConfig(base_lr=1e9, max_iterations=50, batch_size=8, seed=3,
                          precision="single")
        with pytest.raises(DivergenceDetected):
            train(desk_spec(2), cfg, (Xtr, ytr))

    def test_curves_csv(self, toy_data, tmp_path):
        (Xtr, ytr), (Xv, yv) = toy_data
        cfg = TrainConfig(max_iterations=6, batch_size=8, seed=4, val_interval=3,
                          precision="single")
        res = train(desk_spec(2), cfg, (Xtr, ytr), (Xv, yv))
        write_curves(res, tmp_path / "loss.csv", tmp_path / "val.csv")
        loss_lines = (tmp_path / "loss.csv").read_text().splitlines()
        assert loss_lines[0] == "iteration,loss,lr"
        assert len(loss_lines) == 7
        val_lines = (tmp_path / "val.csv").read_text().splitlines()
        assert val_lines[0] == "iteration,val_accuracy"
        assert len(val_lines) == 3  # iterations 3 and 6


class TestCheckpoint:
    def test_roundtrip_preserves_predictions(self, toy_data, tmp_path):
        (Xtr, ytr), _ = toy_data
        net = Network(desk_spec(2), dtype=np.float64, seed=5)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net, iteration=123)
        loaded, iteration, velocity, rng_states = load_checkpoint(path)
        assert iteration == 123
        assert velocity is None
        x = batch_to_input(Xtr[:4], np.float64)
        np.testing.assert_array_equal(net.forward(x), loaded.forward(x))

    def test_resume_continues_trajectory(self, toy_data, tmp_path):
        (Xtr, ytr), _ = toy_data
        ckpt = tmp_path / "mid.ckpt"
        cfg_a = TrainConfig(max_iterations=20, batch_size=16, seed=6, precision="double")
        full = train(desk_spec(2), cfg_a, (Xtr, ytr))

        cfg_b = TrainConfig(max_iterations=10, batch_size=16, seed=6, precision="double")
        train(desk_spec(2), cfg_b, (Xtr, ytr), checkpoint_path=ckpt)
        resumed = train(desk_spec(2), cfg_a, (Xtr, ytr), resume_from=ckpt)

        # the resumed run continues the original trajectory exactly:
        # every resumed loss is within 5% of (in fact equal to) the
        # uninterrupted run's loss at the same iteration, with no reset
        # toward the from-scratch starting loss
        assert resumed.loss_curve[0][0] == 10
        full_tail = dict((it, loss) for it, loss, _ in full.loss_curve)
        for it, loss, _ in resumed.loss_curve:
            assert abs(loss - full_tail[it]) / full_tail[it] < 0.05
            assert loss == pytest.approx(full_tail[it], rel=1e-12)
        assert resumed.loss_curve[0][1] < 0.5 * full.loss_curve[0][1]

    def test_corrupted_checkpoint(self, toy_data, tmp_path):
        net = Network(desk_spec(2), dtype=np.float32, seed=8)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net)
        raw = path.read_bytes()
        (tmp_path / "trunc.ckpt").write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "trunc.ckpt")
        (tmp_path / "garbage.ckpt").write_bytes(b"not a checkpoint at all")
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "garbage.ckpt")

    def test_velocity_roundtrip(self, tmp_path):
        net = Network(desk_spec(2), dtype=np.float64, seed=9)
        vel = {k: np.full_like(v, 0.5) for k, v in net.parameters().items()}
        path = tmp_path / "v.ckpt"
        save_checkpoint(path, net, iteration=1, velocity=vel)
        _, _, loaded_vel, _ = load_checkpoint(path)
        for k in vel:
            np.testing.assert_array_equal(loaded_vel[k], vel[k])


class TestTrainConfigParsing:
    def test_parse_and_render(self):
        text = """
        # training setup
        base_lr = 0.01
        momentum = 0.9
        max_iterations = 500
        batch_size = 32
        precision = single
        """
        cfg = parse_train_config(text)
        assert cfg.base_lr == 0.01
        assert cfg.max_iterations == 500
        assert cfg.precision == "single"
        again = parse_train_config(cfg.render())
        assert again == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_train_config("warp_factor = 9\n")

    def test_bad_precision(self):
        with pytest.raises(ConfigError):
            parse_train_config("precision = half\n")
