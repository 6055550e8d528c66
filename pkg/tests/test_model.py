"""Reward model, losses, analytic gradients (checked against central finite
differences), and the training loop."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featpref import (
    Condition,
    ContextSampler,
    DomainSpec,
    ExampleLabel,
    FeatureLabel,
    FeaturePref,
    FeatureSpace,
    FeatureSpec,
    PreferenceDataset,
    PreferenceRecord,
    TrainConfig,
    answer_query,
    bt_prob,
    feat_loss,
    feature_reward,
    gradient,
    joint_loss,
    make_mushroom_domain,
    reward,
    reward_batch,
    rlhf_loss,
    sample_context,
    sample_reward,
    train,
)
from featpref.model import init_model, zero_model

LN2 = math.log(2.0)


def mushroom_space():
    return make_mushroom_domain().feature_space


def random_model(space, rng, scale=1.0):
    model = zero_model(space)
    vec = rng.uniform(-scale, scale, model.params_vector().size)
    model.set_params_vector(vec)
    return model


def random_dataset(space, rng, m=5, with_features=True, with_synth=False):
    records = []
    encodings = [f.encodings if f.is_discrete else None for f in space.features]
    for i in range(m):
        a1, a2 = [], []
        for j, f in enumerate(space.features):
            if f.is_discrete:
                a1.append(float(rng.choice(encodings[j])))
                a2.append(float(rng.choice(encodings[j])))
            else:
                a1.append(float(rng.uniform(f.lower, f.upper)))
                a2.append(float(rng.uniform(f.lower, f.upper)))
        label = ExampleLabel(int(rng.choice([-1, 0, 1])))
        feats = ()
        if with_features:
            feats = tuple(
                FeaturePref(j, FeatureLabel(int(rng.choice([-1, 0, 1]))))
                for j in range(space.n) if rng.random() < 0.6)
        synth = bool(with_synth and rng.random() < 0.3)
        if synth:
            feats = tuple(FeaturePref(fp.feature_index, fp.label)
                          for fp in feats if fp.label is not FeatureLabel.NONE)
        records.append(PreferenceRecord(
            a1=tuple(a1), a2=tuple(a2), example_label=label,
            feature_labels=feats, synthesized=synth))
    return PreferenceDataset(tuple(records), space)


def finite_difference_gradient(model, dataset, beta, step=1e-5):
    base = model.params_vector()
    out = np.zeros_like(base)
    for i in range(base.size):
        for sign, slot in ((+1, 0), (-1, 1)):
            vec = base.copy()
            vec[i] += sign * step
            model.set_params_vector(vec)
            val = joint_loss(model, dataset, beta).total
            if slot == 0:
                plus = val
            else:
                minus = val
        out[i] = (plus - minus) / (2 * step)
    model.set_params_vector(base)
    return out


class TestFeatureReward:
    def test_zero_predictor(self):
        model = zero_model(mushroom_space())
        assert feature_reward(model, 0, 1.0) == 0.0

    def test_one_hot_selector(self):
        model = zero_model(mushroom_space())
        model.predictors[2] = np.array([0.3, -0.1, 0.8])
        # encodings (-1, 0, 1): value 1.0 selects position 2
        assert feature_reward(model, 2, 1.0) == pytest.approx(0.8)
        assert feature_reward(model, 2, -1.0) == pytest.approx(0.3)

    def test_continuous_scalar_product(self):
        space = FeatureSpace((FeatureSpec.continuous("x"),))
        model = zero_model(space)
        model.predictors[0] = np.array([2.0])
        assert feature_reward(model, 0, 0.25) == pytest.approx(0.5)

    def test_invalid_discrete_value(self):
        model = zero_model(mushroom_space())
        with pytest.raises(ValueError):
            feature_reward(model, 0, 0.5)


class TestReward:
    def test_zero_combiner(self):
        rng = np.random.default_rng(0)
        model = random_model(mushroom_space(), rng)
        model.combiner = np.zeros(6)
        assert reward(model, [1.0, 0, -1, 1, 0, -1]) == 0.0

    def test_two_feature_sum(self):
        space = FeatureSpace((FeatureSpec.continuous("x"),
                              FeatureSpec.continuous("y")))
        model = zero_model(space)
        model.predictors = [np.array([0.5]), np.array([-0.25])]
        model.combiner = np.array([1.0, 1.0])
        assert reward(model, [1.0, 1.0]) == pytest.approx(0.25)

    def test_matches_independent_formula(self):
        # independent re-implementation: explicit loops over features/values
        rng = np.random.default_rng(7)
        space = mushroom_space()
        for _ in range(20):
            model = random_model(space, rng)
            a = rng.choice([-1.0, 0.0, 1.0], size=6)
            expected = 0.0
            for j, f in enumerate(space.features):
                onehot = [1.0 if a[j] == e else 0.0 for e in f.encodings]
                rj = sum(w * x for w, x in zip(model.predictors[j], onehot))
                expected += model.combiner[j] * rj
            assert reward(model, a) == pytest.approx(expected, abs=1e-12)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(1)
        space = mushroom_space()
        model = random_model(space, rng)
        X = rng.choice([-1.0, 0.0, 1.0], size=(10, 6))
        batch = reward_batch(model, X)
        for i, row in enumerate(X):
            assert batch[i] == pytest.approx(reward(model, row), abs=1e-12)

    def test_dimension_mismatch(self):
        model = zero_model(mushroom_space())
        with pytest.raises(ValueError):
            reward(model, [1.0, 0.0])


class TestBtProb:
    def test_symmetry_at_equal_rewards(self):
        assert bt_prob(0.0, 0.0) == 0.5

    def test_closed_form(self):
        assert bt_prob(math.log(3.0), 0.0) == pytest.approx(0.75, abs=1e-12)

    def test_extreme_values_stay_inside_unit_interval(self):
        hi = bt_prob(1000.0, 0.0)
        lo = bt_prob(-1000.0, 0.0)
        assert math.isfinite(hi) and math.isfinite(lo)
        assert 1.0 - 1e-12 < hi < 1.0
        assert 0.0 < lo < 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            bt_prob(float("nan"), 0.0)
        with pytest.raises(ValueError):
            bt_prob(0.0, float("inf"))

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=300, deadline=None)
    def test_complement_and_shift_invariance(self, r1, r2, c):
        assert bt_prob(r1, r2) + bt_prob(r2, r1) == pytest.approx(1.0, abs=1e-12)
        assert bt_prob(r1 + c, r2 + c) == pytest.approx(bt_prob(r1, r2), abs=1e-12)


class TestRlhfLoss:
    def test_zero_model_single_record(self):
        space = mushroom_space()
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0, 0, 0, 0, 0, 0), a2=(-1.0, 0, 0, 0, 0, 0),
            example_label=ExampleLabel.PREFER_FIRST),), space)
        assert rlhf_loss(zero_model(space), ds) == pytest.approx(LN2, abs=1e-12)

    def test_zero_model_additivity(self):
        rng = np.random.default_rng(2)
        space = mushroom_space()
        for m in (1, 4, 9):
            ds = random_dataset(space, rng, m=m, with_features=False)
            assert rlhf_loss(zero_model(space), ds) == pytest.approx(
                m * LN2, abs=1e-12)

    def test_known_gap(self):
        # reward gap ln 3 with a "first preferred" label: loss = -ln(3/4)
        space = FeatureSpace((FeatureSpec.continuous("x"),))
        model = zero_model(space)
        model.predictors = [np.array([math.log(3.0)])]
        model.combiner = np.array([1.0])
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,), a2=(0.0,), example_label=ExampleLabel.PREFER_FIRST),), space)
        assert rlhf_loss(model, ds) == pytest.approx(0.2876820724517809, abs=1e-12)

    def test_empty_dataset_rejected(self):
        space = mushroom_space()
        with pytest.raises(ValueError):
            rlhf_loss(zero_model(space), PreferenceDataset((), space))

    def test_partition_additivity(self):
        rng = np.random.default_rng(3)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=8)
        a = PreferenceDataset(ds.records[:3], space)
        b = PreferenceDataset(ds.records[3:], space)
        assert rlhf_loss(model, ds) == pytest.approx(
            rlhf_loss(model, a) + rlhf_loss(model, b), abs=1e-10)


class TestFeatLoss:
    def test_zero_model_six_labels(self):
        space = mushroom_space()
        labels = tuple(FeaturePref(j, FeatureLabel.PREFER_FIRST) for j in range(6))
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,) * 6, a2=(-1.0,) * 6,
            example_label=ExampleLabel.PREFER_FIRST, feature_labels=labels),), space)
        assert feat_loss(zero_model(space), ds) == pytest.approx(6 * LN2, abs=1e-12)

    def test_no_labels_contribute_zero(self):
        space = mushroom_space()
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,) * 6, a2=(-1.0,) * 6,
            example_label=ExampleLabel.PREFER_FIRST),), space)
        assert feat_loss(zero_model(space), ds) == 0.0

    def test_known_feature_gap(self):
        space = FeatureSpace((FeatureSpec.continuous("x"),))
        model = zero_model(space)
        model.predictors = [np.array([math.log(3.0)])]
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,), a2=(0.0,), example_label=ExampleLabel.PREFER_FIRST,
            feature_labels=(FeaturePref(0, FeatureLabel.PREFER_FIRST),)),), space)
        assert feat_loss(model, ds) == pytest.approx(0.2876820724517809, abs=1e-12)

    def test_none_labels_skipped(self):
        space = mushroom_space()
        labels = (FeaturePref(0, FeatureLabel.PREFER_FIRST),
                  FeaturePref(1, FeatureLabel.NONE))
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,) * 6, a2=(-1.0,) * 6,
            example_label=ExampleLabel.PREFER_FIRST, feature_labels=labels),), space)
        assert feat_loss(zero_model(space), ds) == pytest.approx(LN2, abs=1e-12)

    def test_synthesized_records_skipped(self):
        space = mushroom_space()
        labels = (FeaturePref(0, FeatureLabel.PREFER_FIRST),)
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,) * 6, a2=(-1.0,) * 6,
            example_label=ExampleLabel.PREFER_FIRST, feature_labels=labels,
            synthesized=True),), space)
        assert feat_loss(zero_model(space), ds) == 0.0

    def test_ignores_combiner(self):
        rng = np.random.default_rng(4)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=6)
        before = feat_loss(model, ds)
        model.combiner = rng.normal(size=6)
        assert feat_loss(model, ds) == pytest.approx(before, abs=1e-12)


class TestJointLoss:
    def test_beta_zero_is_example_loss(self):
        rng = np.random.default_rng(5)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=5)
        lb = joint_loss(model, ds, 0.0)
        assert lb.total == pytest.approx(rlhf_loss(model, ds), abs=1e-12)

    def test_beta_one_is_feature_loss(self):
        rng = np.random.default_rng(6)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=5)
        lb = joint_loss(model, ds, 1.0)
        assert lb.total == pytest.approx(feat_loss(model, ds), abs=1e-12)

    def test_half_beta_arithmetic(self):
        space = mushroom_space()
        labels = tuple(FeaturePref(j, FeatureLabel.PREFER_FIRST) for j in range(6))
        ds = PreferenceDataset((PreferenceRecord(
            a1=(1.0,) * 6, a2=(-1.0,) * 6,
            example_label=ExampleLabel.PREFER_FIRST, feature_labels=labels),), space)
        lb = joint_loss(zero_model(space), ds, 0.5)
        assert lb.rlhf_component == pytest.approx(LN2, abs=1e-12)
        assert lb.feat_component == pytest.approx(6 * LN2, abs=1e-12)
        assert lb.total == pytest.approx(3.5 * LN2, abs=1e-12)
        assert lb.pair_count == 1
        assert lb.feature_term_count == 6

    def test_beta_out_of_range(self):
        space = mushroom_space()
        ds = random_dataset(space, np.random.default_rng(0), m=2)
        with pytest.raises(ValueError):
            joint_loss(zero_model(space), ds, 1.5)

    def test_label_flip_symmetry(self):
        rng = np.random.default_rng(8)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=6)
        flipped = PreferenceDataset(tuple(r.flipped() for r in ds), space)
        for beta in (0.0, 0.5, 1.0):
            assert joint_loss(model, ds, beta).total == pytest.approx(
                joint_loss(model, flipped, beta).total, abs=1e-10)


class TestGradient:
    def test_feature_only_loss_with_no_labels_is_flat(self):
        space = mushroom_space()
        ds = random_dataset(space, np.random.default_rng(0), m=4,
                            with_features=False)
        g = gradient(zero_model(space), ds, 1.0).as_vector()
        assert np.all(g == 0.0)

    def test_identical_actions_give_zero_gradient(self):
        rng = np.random.default_rng(9)
        space = mushroom_space()
        model = random_model(space, rng)
        a = tuple(float(x) for x in rng.choice([-1.0, 0.0, 1.0], size=6))
        ds = PreferenceDataset((PreferenceRecord(
            a1=a, a2=a, example_label=ExampleLabel.PREFER_FIRST),), space)
        g = gradient(model, ds, 0.5).as_vector()
        assert np.all(g == 0.0)

    @pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
    def test_matches_finite_differences_mushroom(self, beta):
        rng = np.random.default_rng(10)
        space = mushroom_space()
        for _ in range(10):
            model = random_model(space, rng)
            ds = random_dataset(space, rng, m=4, with_synth=True)
            analytic = gradient(model, ds, beta).as_vector()
            numeric = finite_difference_gradient(model, ds, beta)
            for a, f in zip(analytic, numeric):
                assert abs(a - f) <= 1e-9 or abs(a - f) / abs(f) < 1e-4

    def test_matches_finite_differences_flight(self):
        from featpref import make_flight_domain

        rng = np.random.default_rng(11)
        space = make_flight_domain().feature_space
        for _ in range(5):
            model = random_model(space, rng)
            ds = random_dataset(space, rng, m=3)
            analytic = gradient(model, ds, 0.5).as_vector()
            numeric = finite_difference_gradient(model, ds, 0.5)
            for a, f in zip(analytic, numeric):
                assert abs(a - f) <= 1e-9 or abs(a - f) / abs(f) < 1e-4

    def test_combiner_gets_no_feature_loss_gradient(self):
        rng = np.random.default_rng(12)
        space = mushroom_space()
        model = random_model(space, rng)
        ds = random_dataset(space, rng, m=5)
        g = gradient(model, ds, 1.0)
        assert np.all(g.combiner == 0.0)


class TestTrain:
    def one_feature_dataset(self, m=12):
        space = FeatureSpace((FeatureSpec.continuous("x"),))
        rng = np.random.default_rng(0)
        records = []
        for _ in range(m):
            lo = rng.uniform(0, 0.4)
            hi = lo + rng.uniform(0.2, 0.6)
            records.append(PreferenceRecord(
                a1=(hi,), a2=(lo,), example_label=ExampleLabel.PREFER_FIRST))
        dom = DomainSpec(feature_space=space, theta_value_set=(-1.0, 0.0, 1.0))
        return dom, PreferenceDataset(tuple(records), space)

    def test_learns_monotone_preference(self):
        dom, ds = self.one_feature_dataset()
        model = train(ds, dom, TrainConfig(learning_rate=0.05, epochs=2000))
        probs = [bt_prob(reward(model, r.a1), reward(model, r.a2)) for r in ds]
        assert min(probs) > 0.9

    def test_bit_identical_across_runs(self):
        dom, ds = self.one_feature_dataset()
        cfg = TrainConfig(epochs=300, rng_seed=42)
        m1 = train(ds, dom, cfg)
        m2 = train(ds, dom, cfg)
        assert np.array_equal(m1.params_vector(), m2.params_vector())

    def test_loss_decreases(self):
        dom = make_mushroom_domain()
        gt = sample_reward(dom, 2, rng_seed=1)
        sampler = ContextSampler(context_size=2, rng_seed=2)
        records = []
        for _ in range(10):
            ctx = sample_context(dom, sampler)
            records.append(answer_query(gt, ctx.actions[0], ctx.actions[1],
                                        Condition.FP))
        ds = PreferenceDataset(tuple(records), dom.feature_space)
        cfg = TrainConfig()
        start = joint_loss(init_model(dom, cfg), ds, cfg.beta).total
        end = joint_loss(train(ds, dom, cfg), ds, cfg.beta).total
        assert end <= start

    def test_empty_dataset_rejected(self):
        dom = make_mushroom_domain()
        with pytest.raises(ValueError):
            train(PreferenceDataset((), dom.feature_space), dom, TrainConfig())

    def test_init_respects_scale_and_seed(self):
        dom = make_mushroom_domain()
        cfg = TrainConfig(init_scale=0.05, rng_seed=3)
        model = init_model(dom, cfg)
        vec = model.params_vector()
        assert np.all(np.abs(vec) <= 0.05)
        assert np.array_equal(vec, init_model(dom, cfg).params_vector())


class TestCheckpoint:
    def test_round_trip(self):
        from featpref.model import checkpoint_to_json, load_checkpoint

        rng = np.random.default_rng(13)
        dom = make_mushroom_domain()
        model = random_model(dom.feature_space, rng)
        model.domain_label = dom.label
        text = checkpoint_to_json(model, TrainConfig())
        loaded = load_checkpoint(text, dom.feature_space)
        assert np.array_equal(loaded.params_vector(), model.params_vector())
        assert loaded.domain_label == "mushroom"
