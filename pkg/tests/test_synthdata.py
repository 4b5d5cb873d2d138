"""Tests for the synthetic benchmark generators and CSV interchange."""

import numpy as np
import numpy.testing as npt
import pytest

from distilkit.adaptation import evaluate
from distilkit.errors import InvalidParameterError
from distilkit.harness import default_teacher, fit_hard_labels
from distilkit.synthdata import (
    BenchmarkSuite,
    ClassificationSet,
    CorruptionSpec,
    DatasetSpec,
    SpeakerSpec,
    benchmark_suite,
    class_means,
    corrupt,
    make_clean,
    make_speaker,
    read_pairs_csv,
    read_set_csv,
    split_per_class,
    write_pairs_csv,
    write_set_csv,
)

BASE = DatasetSpec(num_classes=4, feature_dim=8, samples_per_class=100, class_separation=6.0, seed=99)


class TestSpecs:
    def test_dataset_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            DatasetSpec(1, 8, 10, 6.0, 0)
        with pytest.raises(InvalidParameterError):
            DatasetSpec(4, 0, 10, 6.0, 0)
        with pytest.raises(InvalidParameterError):
            DatasetSpec(4, 8, 10, 0.0, 0)

    def test_corruption_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            CorruptionSpec("gaussian_blur", 1.0, 0)
        with pytest.raises(InvalidParameterError):
            CorruptionSpec("additive_gaussian", -0.5, 0)

    def test_speaker_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            SpeakerSpec(0, np.ones(4), np.zeros(4), 0, 10, 1)


class TestMakeClean:
    def test_deterministic_bit_identical(self):
        a = make_clean(BASE)
        b = make_clean(BASE)
        assert a.features.tobytes() == b.features.tobytes()
        npt.assert_array_equal(a.labels, b.labels)

    def test_exact_class_counts(self):
        data = make_clean(BASE)
        counts = np.bincount(data.labels, minlength=4)
        npt.assert_array_equal(counts, [100, 100, 100, 100])

    def test_mean_separation_floor(self):
        means = class_means(BASE)
        for i in range(len(means)):
            for j in range(i + 1, len(means)):
                assert np.linalg.norm(means[i] - means[j]) >= BASE.class_separation

    def test_unit_within_class_std(self):
        spec = DatasetSpec(3, 6, 4000, 6.0, seed=5)
        data = make_clean(spec)
        for c in range(3):
            block = data.features[data.labels == c]
            npt.assert_allclose(block.std(axis=0), 1.0, atol=0.05)

    def test_high_separation_teacher_reaches_99(self):
        # Separation 8, 500 train per class, trained 100 epochs.
        spec = DatasetSpec(4, 8, 700, 8.0, seed=31)
        train, test = split_per_class(make_clean(spec), 500)
        net = default_teacher(8, 4, seed=0)
        net, _ = fit_hard_labels(net, train.features, train.labels, 100, 0.05, 32, 0)
        assert evaluate(net, test.features, test.labels) >= 0.99


class TestSplitPerClass:
    def test_disjoint_and_ordered(self):
        data = make_clean(BASE)
        first, rest = split_per_class(data, 70)
        assert len(first) == 280 and len(rest) == 120
        npt.assert_array_equal(np.bincount(first.labels), [70] * 4)
        npt.assert_array_equal(np.bincount(rest.labels), [30] * 4)
        combined = np.vstack([first.features, rest.features])
        assert {tuple(r) for r in combined} == {tuple(r) for r in data.features}

    def test_insufficient_samples_rejected(self):
        with pytest.raises(InvalidParameterError):
            split_per_class(make_clean(BASE), 101)


class TestCorrupt:
    def test_zero_severity_identity_all_kinds(self):
        data = make_clean(BASE)
        for kind in ("additive_gaussian", "affine_shift", "feature_dropout"):
            pairs = corrupt(data, CorruptionSpec(kind, 0.0, seed=3))
            npt.assert_array_equal(pairs.x_student, pairs.x_teacher)

    def test_additive_gaussian_second_moment(self):
        # Monte Carlo: mean squared perturbation approximates severity^2.
        spec = DatasetSpec(2, 10, 20000, 5.0, seed=8)
        data = make_clean(spec)
        sigma = 1.7
        pairs = corrupt(data, CorruptionSpec("additive_gaussian", sigma, seed=4))
        msd = float(((pairs.x_student - pairs.x_teacher) ** 2).mean())
        assert abs(msd - sigma**2) / sigma**2 <= 0.05

    def test_labels_and_order_preserved(self):
        data = make_clean(BASE)
        pairs = corrupt(data, CorruptionSpec("feature_dropout", 0.5, seed=5))
        npt.assert_array_equal(pairs.labels, data.labels)
        npt.assert_array_equal(pairs.x_teacher, data.features)
        assert len(pairs) == len(data)

    def test_deterministic(self):
        data = make_clean(BASE)
        spec = CorruptionSpec("additive_gaussian", 2.0, seed=6)
        assert corrupt(data, spec).x_student.tobytes() == corrupt(data, spec).x_student.tobytes()

    def test_severity_monotonic_teacher_degradation(self):
        # Teacher accuracy on corrupted data is non-increasing in severity,
        # as a mean over 5 data seeds and 3 severities.
        severities = (1.5, 3.0, 4.5)
        mean_accs = []
        per_seed = {s: [] for s in severities}
        for seed in range(5):
            spec = DatasetSpec(4, 8, 250, 6.0, seed=1000 + seed)
            data = make_clean(spec)
            net = default_teacher(8, 4, seed=seed)
            net, _ = fit_hard_labels(net, data.features, data.labels, 6, 0.01, 32, seed)
            for s in severities:
                pairs = corrupt(data, CorruptionSpec("additive_gaussian", s, seed=2000 + seed))
                per_seed[s].append(evaluate(net, pairs.x_student, pairs.labels))
        mean_accs = [float(np.mean(per_seed[s])) for s in severities]
        assert mean_accs[0] >= mean_accs[1] >= mean_accs[2]


class TestMakeSpeaker:
    def test_identity_affine_matches_clean_distribution(self):
        # A teacher scores identity-speaker data like held-out clean data.
        spec = DatasetSpec(4, 8, 700, 6.0, seed=41)
        train, test = split_per_class(make_clean(spec), 500)
        net = default_teacher(8, 4, seed=0)
        net, _ = fit_hard_labels(net, train.features, train.labels, 6, 0.01, 32, 0)
        clean_acc = evaluate(net, test.features, test.labels)
        accs = []
        for k in range(5):
            spk = SpeakerSpec(k, np.ones(8), np.zeros(8), 400, 400, seed=500 + k)
            adapt, _ = make_speaker(spec, spk)
            accs.append(evaluate(net, adapt.features, adapt.labels))
        assert abs(float(np.mean(accs)) - clean_acc) <= 0.02

    def test_offset_shifts_sample_means(self):
        spec = DatasetSpec(2, 4, 100, 6.0, seed=42)
        offset = np.array([1.0, -2.0, 0.5, 3.0])
        spk = SpeakerSpec(0, np.ones(4), offset, 4000, 1, seed=7)
        adapt, _ = make_speaker(spec, spk)
        means = class_means(spec)
        for c in range(2):
            block = adapt.features[adapt.labels == c]
            npt.assert_allclose(block.mean(axis=0), means[c] + offset, atol=0.1)

    def test_adapt_and_test_disjoint(self):
        spk = SpeakerSpec(0, np.ones(8), np.zeros(8), 50, 50, seed=9)
        adapt, test = make_speaker(BASE, spk)
        assert adapt.features.shape == test.features.shape
        assert not np.array_equal(adapt.features, test.features)

    def test_balanced_round_robin_labels(self):
        spk = SpeakerSpec(0, np.ones(8), np.zeros(8), 200, 400, seed=10)
        adapt, test = make_speaker(BASE, spk)
        npt.assert_array_equal(np.bincount(adapt.labels), [50] * 4)
        npt.assert_array_equal(np.bincount(test.labels), [100] * 4)


class TestBenchmarkSuite:
    def test_bit_reproducible(self):
        a = benchmark_suite(7)
        b = benchmark_suite(7)
        assert isinstance(a, BenchmarkSuite)
        assert a.domain.train_pairs.x_student.tobytes() == b.domain.train_pairs.x_student.tobytes()
        assert a.domain.clean_test.features.tobytes() == b.domain.clean_test.features.tobytes()
        for ma, mb in zip(a.speaker.speakers, b.speaker.speakers):
            assert ma.adapt.features.tobytes() == mb.adapt.features.tobytes()
            assert ma.test.features.tobytes() == mb.test.features.tobytes()

    def test_scenario_shapes(self):
        suite = benchmark_suite(7)
        assert len(suite.domain.clean_train) == 2000
        assert len(suite.domain.clean_test) == 800
        assert len(suite.domain.train_pairs) == 2000
        assert len(suite.domain.test_pairs) == 800
        assert len(suite.speaker.speakers) == 5
        for member in suite.speaker.speakers:
            assert len(member.adapt) == 200
            assert len(member.test) == 400

    def test_distinct_noise_streams(self):
        suite = benchmark_suite(7)
        assert suite.domain.train_corruption.seed != suite.domain.test_corruption.seed

    def test_shared_base_between_scenarios(self):
        suite = benchmark_suite(7)
        assert suite.domain.clean_train is suite.speaker.clean_train


class TestCsvInterchange:
    def test_set_roundtrip_bit_exact(self, tmp_path):
        data = make_clean(BASE)
        path = tmp_path / "set.csv"
        write_set_csv(path, data)
        loaded = read_set_csv(path)
        assert loaded.features.tobytes() == data.features.tobytes()
        npt.assert_array_equal(loaded.labels, data.labels)

    def test_set_header(self, tmp_path):
        data = ClassificationSet(np.ones((2, 3)), np.array([0, 1]))
        path = tmp_path / "set.csv"
        write_set_csv(path, data)
        assert path.read_text().splitlines()[0] == "label,f0,f1,f2"

    def test_pairs_roundtrip_bit_exact(self, tmp_path):
        pairs = corrupt(make_clean(BASE), CorruptionSpec("additive_gaussian", 3.0, seed=3))
        path = tmp_path / "pairs.csv"
        write_pairs_csv(path, pairs)
        loaded = read_pairs_csv(path)
        assert loaded.x_teacher.tobytes() == pairs.x_teacher.tobytes()
        assert loaded.x_student.tobytes() == pairs.x_student.tobytes()
        npt.assert_array_equal(loaded.labels, pairs.labels)

    def test_pairs_header(self, tmp_path):
        pairs = corrupt(
            ClassificationSet(np.ones((1, 2)), np.array([1])),
            CorruptionSpec("additive_gaussian", 0.0, seed=1),
        )
        path = tmp_path / "pairs.csv"
        write_pairs_csv(path, pairs)
        assert path.read_text().splitlines()[0] == "label,t0,t1,s0,s1"

    def test_write_deterministic_bytes(self, tmp_path):
        data = make_clean(BASE)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_set_csv(p1, data)
        write_set_csv(p2, data)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("name,x0\nfoo,1.0\n")
        with pytest.raises(InvalidParameterError):
            read_set_csv(path)
