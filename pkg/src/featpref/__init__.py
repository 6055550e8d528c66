"""Reward learning from example- and feature-level pairwise preferences,
with pragmatic augmentation of reward-irrelevant features."""

from .augment import AugmentMode, augment, feat_combos, mask_irrelevant
from .data import (
    ExampleLabel,
    FeatureLabel,
    FeaturePref,
    PreferenceDataset,
    PreferenceRecord,
    load_jsonl,
    save_jsonl,
)
from .domains import (
    Context,
    ContextSampler,
    DomainSpec,
    FeatureSpace,
    FeatureSpec,
    GroundTruthReward,
    check_actions,
    make_flight_domain,
    make_mushroom_domain,
    sample_context,
    sample_reward,
    true_reward,
)
from .model import (
    LossBreakdown,
    RewardModel,
    TrainConfig,
    TrainingFailure,
    bt_prob,
    feat_loss,
    feature_reward,
    gradient,
    joint_loss,
    reward,
    reward_batch,
    rlhf_loss,
    train,
)
from .oracle import (
    Condition,
    OracleConfig,
    answer_query,
    oracle_example_pref,
    oracle_feature_pref,
    oracle_relevance_mask,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentMode", "augment", "feat_combos", "mask_irrelevant",
    "ExampleLabel", "FeatureLabel", "FeaturePref", "PreferenceDataset",
    "PreferenceRecord", "load_jsonl", "save_jsonl",
    "Context", "ContextSampler", "DomainSpec", "FeatureSpace", "FeatureSpec",
    "GroundTruthReward", "check_actions", "make_flight_domain",
    "make_mushroom_domain", "sample_context", "sample_reward", "true_reward",
    "LossBreakdown", "RewardModel", "TrainConfig", "TrainingFailure",
    "bt_prob", "feat_loss", "feature_reward", "gradient", "joint_loss",
    "reward", "reward_batch", "rlhf_loss", "train",
    "Condition", "OracleConfig", "answer_query", "oracle_example_pref",
    "oracle_feature_pref", "oracle_relevance_mask",
    "__version__",
]
