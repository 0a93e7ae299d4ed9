"""Training samples, filter prediction, and the learning-curve runner."""

import numpy as np
import pytest

from voltf import (FilterSpec, InsufficientData, MlpNetwork, PhantomSpec,
                   ShapeMismatch, TrainConfig, TrainingSample,
                   WrongFilterCount, build_sample, joint_histogram,
                   gradient_magnitude, learning_curve, load_samples,
                   make_phantom, pack_geometry, predict_filters, save_samples,
                   synthetic_heart_dataset, unpack_geometry)
from voltf.autoplace import MIN_FILTER_SIZE, sample_from_json, sample_to_json
from voltf.histogram import ReducedInput
from voltf.neural import forward, train


def constant_volume(value=0.5, dims=(8, 8, 8)):
    return make_phantom(PhantomSpec(dims=dims, background_value=value))


def two_filters():
    return [FilterSpec(center_x=0.3, center_y=0.1, size_x=0.2, size_y=0.1),
            FilterSpec(center_x=0.5, center_y=0.2, size_x=0.1, size_y=0.1)]


def zero_placement_net():
    return MlpNetwork([2048, 4, 8],
                      [np.zeros((2048, 4)), np.zeros((4, 8))],
                      [np.zeros(4), np.zeros(8)])


class TestPackUnpack:
    def test_fixed_slot_order(self):
        target = pack_geometry(((0.3, 0.1), (0.2, 0.1)), ((0.5, 0.2), (0.1, 0.1)))
        assert target.tolist() == [0.3, 0.1, 0.2, 0.1, 0.5, 0.2, 0.1, 0.1]

    def test_bijection_on_random_geometries(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            g1 = ((rng.uniform(0, 1), rng.uniform(0, 1)),
                  (rng.uniform(0.001, 1), rng.uniform(0.001, 1)))
            g2 = ((rng.uniform(0, 1), rng.uniform(0, 1)),
                  (rng.uniform(0.001, 1), rng.uniform(0.001, 1)))
            back1, back2 = unpack_geometry(pack_geometry(g1, g2))
            assert back1 == g1
            assert back2 == g2


class TestBuildSample:
    def test_target_packs_filter_geometry(self):
        s = build_sample(constant_volume(), two_filters())
        assert s.target.tolist() == [0.3, 0.1, 0.2, 0.1, 0.5, 0.2, 0.1, 0.1]

    def test_constant_volume_single_nonzero_input(self):
        s = build_sample(constant_volume(), two_filters())
        assert np.count_nonzero(s.input.values) == 1

    def test_wrong_filter_count(self):
        with pytest.raises(WrongFilterCount):
            build_sample(constant_volume(), two_filters()[:1])

    def test_file_round_trip(self, tmp_path):
        spec = PhantomSpec(dims=(12, 12, 12), background_value=0.2,
                           shells=(((5.5, 5.5, 5.5), 4.0, 0.7),))
        s = build_sample(make_phantom(spec), two_filters(), label="fixture")
        save_samples(tmp_path, [s])
        (back,) = load_samples(tmp_path)
        assert np.array_equal(back.input.values, s.input.values)
        assert np.array_equal(back.target, s.target)
        assert back.label == s.label

    def test_json_round_trip_exact(self):
        s = build_sample(constant_volume(0.37), two_filters(), label="x")
        back = sample_from_json(sample_to_json(s))
        assert np.array_equal(back.input.values, s.input.values)
        assert np.array_equal(back.target, s.target)


class TestPredictFilters:
    def histogram_for(self, volume):
        return joint_histogram(volume, gradient_magnitude(volume))

    def test_zero_net_outputs_centered_geometry(self):
        h = self.histogram_for(constant_volume())
        geoms = predict_filters(zero_placement_net(), h)
        for center, size in geoms:
            assert center == (0.5, 0.5)
            assert size == (0.5, 0.5)

    def test_shape_mismatch(self):
        h = self.histogram_for(constant_volume())
        bad = MlpNetwork.random([16, 4, 8], seed=0)
        with pytest.raises(ShapeMismatch):
            predict_filters(bad, h)

    def test_size_clamped_to_reduced_cell(self):
        # Bias the size slots hard negative: outputs ~0, clamped to 1/64.
        net = zero_placement_net()
        for slot in (2, 3, 6, 7):
            net.thresholds[1][slot] = -30.0
        h = self.histogram_for(constant_volume())
        geoms = predict_filters(net, h)
        for _, size in geoms:
            assert size == (MIN_FILTER_SIZE, MIN_FILTER_SIZE)

    def test_trained_net_recovers_training_geometry(self):
        spec = PhantomSpec(dims=(16, 16, 16), background_value=0.2,
                           shells=(((7.5, 7.5, 7.5), 5.0, 0.7),))
        v = make_phantom(spec)
        s = build_sample(v, two_filters())
        net = MlpNetwork.random([2048, 8, 8], seed=1)
        cfg = TrainConfig(learning_rate=0.3, max_epochs=4000, error_limit=1e-4,
                          shuffle_seed=1)
        net, report = train(net, [(s.input.values, s.target)], cfg)
        assert report.epoch_mse[-1] < 1e-4
        geoms = predict_filters(net, self.histogram_for(v))
        predicted = pack_geometry(*geoms)
        assert np.max(np.abs(predicted - s.target)) < 0.02

    def test_deterministic(self):
        h = self.histogram_for(constant_volume())
        net = MlpNetwork.random([2048, 4, 8], seed=3)
        assert predict_filters(net, h) == predict_filters(net, h)


class TestSyntheticDataset:
    def test_shapes_and_ranges(self):
        samples = synthetic_heart_dataset(4, seed=1, dims=(16, 16, 16))
        assert len(samples) == 4
        for s in samples:
            assert s.input.values.size == 2048
            assert s.target.size == 8
            assert s.target.min() >= 0.0 and s.target.max() <= 1.0

    def test_reproducible(self):
        a = synthetic_heart_dataset(3, seed=9, dims=(16, 16, 16))
        b = synthetic_heart_dataset(3, seed=9, dims=(16, 16, 16))
        for s, t in zip(a, b):
            assert np.array_equal(s.input.values, t.input.values)
            assert np.array_equal(s.target, t.target)


def identical_dataset(n=12):
    s = build_sample(constant_volume(0.4, dims=(8, 8, 8)), two_filters())
    return [TrainingSample(input=ReducedInput(values=s.input.values),
                           target=s.target, label=f"dup{i}")
            for i in range(n)]


class TestLearningCurve:
    def test_insufficient_data(self):
        with pytest.raises(InsufficientData):
            learning_curve(identical_dataset(11), TrainConfig(max_epochs=1))

    def test_identical_samples_give_equal_mses(self):
        # Batch mode: the average of n identical deltas is the single
        # delta, so every n follows the same trajectory exactly.
        cfg = TrainConfig(learning_rate=0.2, mode="batch", max_epochs=30,
                          shuffle_seed=0, init_seed=0)
        result = learning_curve(identical_dataset(), cfg, hidden=4)
        vals = [row[2] for row in result.rows]
        trains = [row[1] for row in result.rows]
        assert max(vals) - min(vals) < 1e-12
        for tr, va in zip(trains, vals):
            assert tr == pytest.approx(va, rel=1e-9)

    def test_csv_shape_and_reproducibility(self, tmp_path):
        samples = synthetic_heart_dataset(12, seed=5, dims=(16, 16, 16))
        cfg = TrainConfig(learning_rate=0.2, max_epochs=15, shuffle_seed=0,
                          init_seed=0)
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            learning_curve(samples, cfg, csv_path=p, hidden=4)
        a, b = (p.read_bytes() for p in paths)
        assert a == b
        lines = a.decode().strip().split("\n")
        assert lines[0] == "n,train_mse,val_mse"
        assert len(lines) == 6
        assert [int(l.split(",")[0]) for l in lines[1:]] == [2, 4, 6, 8, 10]

    def test_plot_emitted(self, tmp_path):
        cfg = TrainConfig(max_epochs=5, init_seed=0)
        learning_curve(identical_dataset(), cfg, hidden=2,
                       plot_path=tmp_path / "curve.png")
        data = (tmp_path / "curve.png").read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
