"""Learned reward model and its training machinery.

The model mirrors the linear ground truth: one independent per-feature
predictor (a one-hot readout for discrete features, a scalar weight for
continuous ones) plus a linear combiner over the predictor outputs. Pair
probabilities follow the two-option softmax of the rewards.

Two cross-entropy losses train it: an example-level loss on the combined
reward of each pair, and a feature-level loss on the raw predictor outputs
(before the combiner) for every feature-labeled pair. The joint objective is
their beta-weighted sum. Gradients are analytic; training is full-batch
gradient descent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .data import ExampleLabel, FeatureLabel, PreferenceDataset
from .domains import CUSTOM, DomainSpec, FeatureSpace


class TrainingFailure(RuntimeError):
    """Training diverged (non-finite loss); carries the epoch it happened at."""

    def __init__(self, epoch: int, message: str = ""):
        super().__init__(message or f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


class FeatureEncoder:
    """Maps action coordinates to predictor inputs: one-hot over the declared
    encodings for discrete features, the raw scalar for continuous ones."""

    def __init__(self, space: FeatureSpace):
        self.space = space
        self.widths = tuple(len(f.encodings) if f.is_discrete else 1
                            for f in space.features)
        starts = np.cumsum((0,) + self.widths[:-1])
        self.block_starts = starts  # for np.add.reduceat over blocks
        self.slices = tuple(slice(int(s), int(s + w))
                            for s, w in zip(starts, self.widths))
        self.total_width = int(sum(self.widths))
        self.col_feature = np.repeat(np.arange(space.n), self.widths)
        self._positions = [
            {enc: i for i, enc in enumerate(f.encodings)} if f.is_discrete else None
            for f in space.features
        ]

    def encode_feature(self, j: int, value: float) -> np.ndarray:
        feat = self.space.features[j]
        if feat.is_discrete:
            pos = self._positions[j].get(float(value))
            if pos is None:
                raise ValueError(
                    f"{value!r} is not a declared encoding of feature {feat.name!r}")
            out = np.zeros(self.widths[j])
            out[pos] = 1.0
            return out
        return np.array([float(value)])

    def encode_batch(self, X: Sequence[Sequence[float]]) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.space.n:
            raise ValueError(f"expected (m, {self.space.n}) actions, got {X.shape}")
        out = np.zeros((X.shape[0], self.total_width))
        for j, feat in enumerate(self.space.features):
            sl = self.slices[j]
            if feat.is_discrete:
                positions = self._positions[j]
                for i, v in enumerate(X[:, j]):
                    pos = positions.get(float(v))
                    if pos is None:
                        raise ValueError(
                            f"{v!r} is not a declared encoding of feature {feat.name!r}")
                    out[i, sl.start + pos] = 1.0
            else:
                out[:, sl.start] = X[:, j]
        return out

    def encode_action(self, a: Sequence[float]) -> np.ndarray:
        return self.encode_batch(np.asarray(a, dtype=float)[None, :])[0]


@dataclass
class RewardModel:
    """Per-feature predictors plus the linear combiner over their outputs."""

    space: FeatureSpace
    predictors: list[np.ndarray]
    combiner: np.ndarray
    domain_label: str = CUSTOM
    encoder: FeatureEncoder = field(init=False, repr=False)

    def __post_init__(self):
        self.encoder = FeatureEncoder(self.space)
        if len(self.predictors) != self.space.n:
            raise ValueError("one predictor per feature required")
        self.predictors = [np.asarray(p, dtype=float) for p in self.predictors]
        for j, p in enumerate(self.predictors):
            if p.shape != (self.encoder.widths[j],):
                raise ValueError(
                    f"predictor {j} has shape {p.shape}, expected "
                    f"({self.encoder.widths[j]},)")
        self.combiner = np.asarray(self.combiner, dtype=float)
        if self.combiner.shape != (self.space.n,):
            raise ValueError("combiner must have one weight per feature")
        if not (np.all(np.isfinite(self.combiner))
                and all(np.all(np.isfinite(p)) for p in self.predictors)):
            raise ValueError("model parameters must be finite")

    @property
    def n(self) -> int:
        return self.space.n

    def predictor_vector(self) -> np.ndarray:
        return np.concatenate(self.predictors) if self.predictors else np.zeros(0)

    def params_vector(self) -> np.ndarray:
        """All parameters flattened: predictor weights then combiner weights."""
        return np.concatenate([self.predictor_vector(), self.combiner])

    def set_params_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        k = self.encoder.total_width
        if vec.shape != (k + self.n,):
            raise ValueError(f"expected {k + self.n} parameters, got {vec.shape}")
        for j, sl in enumerate(self.encoder.slices):
            self.predictors[j] = vec[sl].copy()
        self.combiner = vec[k:].copy()


def zero_model(space: FeatureSpace, domain_label: str = CUSTOM) -> RewardModel:
    enc = FeatureEncoder(space)
    return RewardModel(space=space,
                       predictors=[np.zeros(w) for w in enc.widths],
                       combiner=np.zeros(space.n),
                       domain_label=domain_label)


def feature_reward(model: RewardModel, j: int, value: float) -> float:
    """Raw output of feature j's predictor for one coordinate value."""
    if not 0 <= j < model.n:
        raise ValueError(f"feature index {j} out of range for n={model.n}")
    return float(model.predictors[j] @ model.encoder.encode_feature(j, value))


def reward(model: RewardModel, a: Sequence[float]) -> float:
    """Combined reward of an action: combiner-weighted sum of feature rewards."""
    a = np.asarray(a, dtype=float)
    if a.shape != (model.n,):
        raise ValueError(f"action has shape {a.shape}, expected ({model.n},)")
    e = model.encoder.encode_action(a)
    feats = np.add.reduceat(e * model.predictor_vector(), model.encoder.block_starts)
    return float(model.combiner @ feats)


def reward_batch(model: RewardModel, X: Sequence[Sequence[float]]) -> np.ndarray:
    """Combined rewards for a batch of actions, shape (m,)."""
    E = model.encoder.encode_batch(X)
    w = model.predictor_vector()
    feats = np.add.reduceat(E * w, model.encoder.block_starts, axis=1)
    return feats @ model.combiner


def bt_prob(r1: float, r2: float) -> float:
    """Probability the first option is preferred under the two-option softmax
    of the rewards; overflow-safe and clamped to the open interval (0, 1)."""
    if not (math.isfinite(r1) and math.isfinite(r2)):
        raise ValueError("rewards must be finite")
    z = r1 - r2
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        p = ez / (1.0 + ez)
    tiny = math.ulp(0.0)
    if p <= 0.0:
        return tiny
    if p >= 1.0:
        return 1.0 - math.ulp(1.0) / 2
    return p


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _cross_entropy(z: np.ndarray, t: np.ndarray) -> np.ndarray:
    # -t log(sigmoid(z)) - (1-t) log(sigmoid(-z)), computed without overflow
    return t * np.logaddexp(0.0, -z) + (1.0 - t) * np.logaddexp(0.0, z)


class _EncodedPairs:
    """Dataset compiled to arrays: encoded action differences, example targets,
    and (row, feature, target) triples for the feature-labeled entries."""

    def __init__(self, encoder: FeatureEncoder, dataset: PreferenceDataset):
        if dataset.feature_space != encoder.space:
            raise ValueError("dataset and model feature spaces differ")
        m = len(dataset)
        a1 = np.array([r.a1 for r in dataset], dtype=float).reshape(m, encoder.space.n)
        a2 = np.array([r.a2 for r in dataset], dtype=float).reshape(m, encoder.space.n)
        self.diff = encoder.encode_batch(a1) - encoder.encode_batch(a2)
        self.targets = np.array(
            [{ExampleLabel.PREFER_FIRST: 1.0,
              ExampleLabel.PREFER_SECOND: 0.0,
              ExampleLabel.TIE: 0.5}[r.example_label] for r in dataset])
        fi, fj, ft = [], [], []
        for i, rec in enumerate(dataset):
            if rec.synthesized:
                continue  # their feature labels duplicate the source record's
            for fp in rec.feature_labels:
                if fp.label is FeatureLabel.NONE:
                    continue
                fi.append(i)
                fj.append(fp.feature_index)
                ft.append(1.0 if fp.label is FeatureLabel.PREFER_FIRST else 0.0)
        self.feat_rows = np.asarray(fi, dtype=int)
        self.feat_cols = np.asarray(fj, dtype=int)
        self.feat_targets = np.asarray(ft, dtype=float)
        self.pair_count = m
        self.feature_term_count = len(fi)
        self.encoder = encoder


@dataclass(frozen=True)
class LossBreakdown:
    rlhf_component: float
    feat_component: float
    total: float
    pair_count: int
    feature_term_count: int


@dataclass
class ModelGradient:
    """Gradient of the joint loss, shaped like the model's parameters."""

    predictors: list[np.ndarray]
    combiner: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.concatenate(self.predictors)
                               if self.predictors else np.zeros(0),
                               self.combiner])


@np.errstate(over="ignore", invalid="ignore")  # divergence surfaces as nan loss
def _evaluate(w: np.ndarray, c: np.ndarray, enc: _EncodedPairs, beta: float,
              want_grad: bool = True):
    """Joint loss and (optionally) its gradient at predictor weights w and
    combiner c, over a compiled dataset."""
    D = enc.diff
    starts = enc.encoder.block_starts
    fdiff = np.add.reduceat(D * w, starts, axis=1)  # per-feature reward diffs
    z = fdiff @ c
    rlhf = float(np.sum(_cross_entropy(z, enc.targets)))

    zf = fdiff[enc.feat_rows, enc.feat_cols]
    feat = float(np.sum(_cross_entropy(zf, enc.feat_targets)))
    total = (1.0 - beta) * rlhf + beta * feat
    losses = LossBreakdown(rlhf, feat, total, enc.pair_count, enc.feature_term_count)
    if not want_grad:
        return losses, None, None

    g = _sigmoid(z) - enc.targets
    grad_c = (1.0 - beta) * (fdiff.T @ g)
    grad_w = (1.0 - beta) * (D.T @ g) * c[enc.encoder.col_feature]

    if len(enc.feat_rows):
        gf = _sigmoid(zf) - enc.feat_targets
        scatter = np.zeros((enc.encoder.space.n, enc.pair_count))
        np.add.at(scatter, (enc.feat_cols, enc.feat_rows), gf)
        per_feature = scatter @ D  # (n, total_width)
        cols = np.arange(enc.encoder.total_width)
        grad_w = grad_w + beta * per_feature[enc.encoder.col_feature, cols]
    return losses, grad_w, grad_c


def rlhf_loss(model: RewardModel, dataset: PreferenceDataset) -> float:
    """Example-level cross-entropy summed over all records (ties count as
    soft 0.5 targets)."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    enc = _EncodedPairs(model.encoder, dataset)
    losses, _, _ = _evaluate(model.predictor_vector(), model.combiner, enc, 0.0,
                             want_grad=False)
    return losses.rlhf_component


def feat_loss(model: RewardModel, dataset: PreferenceDataset) -> float:
    """Feature-level cross-entropy on raw predictor outputs, summed over every
    labeled feature of every non-synthesized record."""
    if len(dataset) == 0:
        return 0.0
    enc = _EncodedPairs(model.encoder, dataset)
    losses, _, _ = _evaluate(model.predictor_vector(), model.combiner, enc, 1.0,
                             want_grad=False)
    return losses.feat_component


def joint_loss(model: RewardModel, dataset: PreferenceDataset, beta: float) -> LossBreakdown:
    """Weighted sum (1-beta) * example loss + beta * feature loss."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    enc = _EncodedPairs(model.encoder, dataset)
    losses, _, _ = _evaluate(model.predictor_vector(), model.combiner, enc, beta,
                             want_grad=False)
    return losses


def gradient(model: RewardModel, dataset: PreferenceDataset, beta: float) -> ModelGradient:
    """Analytic gradient of the joint loss with respect to every parameter.

    The combiner only receives example-loss gradient (the feature loss reads
    predictor outputs before the combiner); predictors receive both.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    enc = _EncodedPairs(model.encoder, dataset)
    _, grad_w, grad_c = _evaluate(model.predictor_vector(), model.combiner, enc, beta)
    return ModelGradient(
        predictors=[grad_w[sl].copy() for sl in model.encoder.slices],
        combiner=grad_c)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    The learning rate applies to the gradient of the summed joint loss, so the
    effective step grows with the number of records; scale it down for
    datasets much beyond a few hundred records.
    """

    beta: float = 0.5
    learning_rate: float = 0.002
    epochs: int = 1500
    rng_seed: int = 0
    init_scale: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")


def init_model(domain: DomainSpec, config: TrainConfig) -> RewardModel:
    """Fresh model with weights uniform in [-init_scale, init_scale]."""
    enc = FeatureEncoder(domain.feature_space)
    rng = np.random.default_rng(config.rng_seed)
    s = config.init_scale
    w = rng.uniform(-s, s, enc.total_width)
    c = rng.uniform(-s, s, domain.n)
    return RewardModel(space=domain.feature_space,
                       predictors=[w[sl].copy() for sl in enc.slices],
                       combiner=c,
                       domain_label=domain.label)


def train(dataset: PreferenceDataset, domain: DomainSpec, config: TrainConfig) -> RewardModel:
    """Full-batch fixed-step gradient descent on the (summed) joint loss.

    Synthesized records therefore add gradient signal in proportion to their
    number, exactly as if they were elicited data. Deterministic given
    (dataset, config). Raises TrainingFailure if the loss goes non-finite.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    model = init_model(domain, config)
    enc = _EncodedPairs(model.encoder, dataset)
    w = model.predictor_vector()
    c = model.combiner.copy()
    for epoch in range(config.epochs):
        losses, grad_w, grad_c = _evaluate(w, c, enc, config.beta)
        if not math.isfinite(losses.total):
            raise TrainingFailure(epoch)
        w -= config.learning_rate * grad_w
        c -= config.learning_rate * grad_c
    model.set_params_vector(np.concatenate([w, c]))
    return model


def save_checkpoint(model: RewardModel, config: TrainConfig | None = None) -> dict:
    return {
        "combiner": model.combiner.tolist(),
        "predictors": [p.tolist() for p in model.predictors],
        "domain_label": model.domain_label,
        "config": asdict(config) if config is not None else None,
    }


def checkpoint_to_json(model: RewardModel, config: TrainConfig | None = None) -> str:
    return json.dumps(save_checkpoint(model, config))


def load_checkpoint(doc: dict | str, space: FeatureSpace) -> RewardModel:
    if isinstance(doc, str):
        doc = json.loads(doc)
    return RewardModel(space=space,
                       predictors=[np.asarray(p, dtype=float) for p in doc["predictors"]],
                       combiner=np.asarray(doc["combiner"], dtype=float),
                       domain_label=doc.get("domain_label", CUSTOM))
