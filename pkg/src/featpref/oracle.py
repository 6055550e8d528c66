"""Simulated user: answers example-level and feature-level preference queries
against a hidden ground-truth reward, and reports which features are relevant.

With no noise the oracle is exact: labels follow the sign of the true reward
difference. With Boltzmann noise the example-level answer is sampled from the
two-option softmax at the configured temperature; feature-level answers stay
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .data import ExampleLabel, FeatureLabel, FeaturePref, PreferenceRecord
from .domains import GroundTruthReward, true_reward

NOISE_NONE = "none"
NOISE_BOLTZMANN = "boltzmann"


class Condition(Enum):
    """Which kinds of labels a query collects."""

    RLHF = "rlhf"                 # example-level comparison only
    FP = "fp"                     # example + a full set of feature labels
    PRAG_RLHF = "prag-rlhf"       # example + relevance mask
    PRAG_FP = "prag-fp"           # example + mask + feature labels for relevant features

    @classmethod
    def parse(cls, text: str) -> "Condition":
        for c in cls:
            if c.value == text.lower():
                return c
        raise ValueError(f"unknown condition {text!r}; expected one of "
                         f"{[c.value for c in cls]}")


@dataclass
class OracleConfig:
    noise: str = NOISE_NONE
    temperature: float = 1.0
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise not in (NOISE_NONE, NOISE_BOLTZMANN):
            raise ValueError(f"unknown noise model {self.noise!r}")
        if self.noise == NOISE_BOLTZMANN and not self.temperature > 0:
            raise ValueError("Boltzmann temperature must be > 0")
        self._rng = np.random.default_rng(self.rng_seed)


def oracle_example_pref(gt: GroundTruthReward, a1: Sequence[float], a2: Sequence[float],
                        cfg: OracleConfig | None = None) -> ExampleLabel:
    """Example-level answer: which of the two actions has higher true reward."""
    cfg = cfg or OracleConfig()
    r1 = true_reward(gt, a1)
    r2 = true_reward(gt, a2)
    if cfg.noise == NOISE_BOLTZMANN:
        p_first = 1.0 / (1.0 + math.exp(min((r2 - r1) / cfg.temperature, 700.0)))
        return (ExampleLabel.PREFER_FIRST if cfg._rng.random() < p_first
                else ExampleLabel.PREFER_SECOND)
    if r1 > r2:
        return ExampleLabel.PREFER_FIRST
    if r1 < r2:
        return ExampleLabel.PREFER_SECOND
    return ExampleLabel.TIE


def oracle_feature_pref(gt: GroundTruthReward, a1: Sequence[float], a2: Sequence[float],
                        j: int, cfg: OracleConfig | None = None) -> FeaturePref:
    """Feature-level answer: compares the weighted contribution of coordinate j."""
    if not 0 <= j < gt.n:
        raise ValueError(f"feature index {j} out of range for n={gt.n}")
    d = gt.theta[j] * (float(a1[j]) - float(a2[j]))
    if d > 0:
        return FeaturePref(j, FeatureLabel.PREFER_FIRST)
    if d < 0:
        return FeaturePref(j, FeatureLabel.PREFER_SECOND)
    return FeaturePref(j, FeatureLabel.NONE)


def oracle_relevance_mask(gt: GroundTruthReward) -> tuple[bool, ...]:
    """True exactly where the ground-truth weight is nonzero."""
    return tuple(bool(t != 0.0) for t in gt.theta)


def answer_query(gt: GroundTruthReward, a1: Sequence[float], a2: Sequence[float],
                 condition: Condition, cfg: OracleConfig | None = None,
                 mask: tuple[bool, ...] | None = None) -> PreferenceRecord:
    """Answer one query, collecting the label kinds the condition asks for.

    `mask` overrides the oracle-derived relevance mask for the pragmatic
    conditions (e.g. when the mask comes from parsing a description instead).
    """
    cfg = cfg or OracleConfig()
    example = oracle_example_pref(gt, a1, a2, cfg)
    a1 = tuple(float(x) for x in a1)
    a2 = tuple(float(x) for x in a2)

    if condition is Condition.RLHF:
        return PreferenceRecord(a1, a2, example)

    if condition is Condition.FP:
        labels = tuple(oracle_feature_pref(gt, a1, a2, j, cfg) for j in range(gt.n))
        return PreferenceRecord(a1, a2, example, feature_labels=labels)

    if mask is None:
        mask = oracle_relevance_mask(gt)

    if condition is Condition.PRAG_RLHF:
        return PreferenceRecord(a1, a2, example, mask=mask)

    if condition is Condition.PRAG_FP:
        labels = tuple(oracle_feature_pref(gt, a1, a2, j, cfg)
                       for j in range(gt.n) if mask[j])
        return PreferenceRecord(a1, a2, example, feature_labels=labels, mask=mask)

    raise ValueError(f"unknown condition {condition!r}")
