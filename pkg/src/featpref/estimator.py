"""sklearn-style estimator wrapping the preference reward learner, so it
composes with the wider ecosystem (get_params/set_params, clone, pipelines
that carry opaque fit inputs)."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import ExampleLabel, PreferenceDataset
from .domains import CUSTOM, DomainSpec, check_actions
from .model import TrainConfig, joint_loss, reward_batch, train
from .harness import eval_gt_best_prob


class RewardLearner(BaseEstimator):
    """Learns a linear reward from a PreferenceDataset of pairwise labels.

    Parameters mirror TrainConfig; `domain` may be omitted, in which case a
    custom domain is derived from the dataset's feature space at fit time.

    Attributes (after fit): `model_` the trained RewardModel, `loss_` the
    final joint-loss breakdown, `n_features_in_` the action dimension.
    """

    def __init__(self, domain: DomainSpec | None = None, beta: float = 0.5,
                 learning_rate: float = 0.002, epochs: int = 1500,
                 init_scale: float = 0.01, random_state: int = 0):
        self.domain = domain
        self.beta = beta
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.init_scale = init_scale
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(beta=self.beta, learning_rate=self.learning_rate,
                           epochs=self.epochs, init_scale=self.init_scale,
                           rng_seed=self.random_state)

    def fit(self, X: PreferenceDataset, y=None) -> "RewardLearner":
        """Train on a preference dataset; y is ignored (labels live in X)."""
        if not isinstance(X, PreferenceDataset):
            raise TypeError("X must be a PreferenceDataset")
        domain = self.domain or DomainSpec(feature_space=X.feature_space,
                                           theta_value_set=(-1.0, 0.0, 1.0),
                                           label=CUSTOM)
        self.model_ = train(X, domain, self._train_config())
        self.loss_ = joint_loss(self.model_, X, self.beta)
        self.n_features_in_ = domain.n
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("this RewardLearner has not been fitted yet")

    def predict(self, X) -> np.ndarray:
        """Rewards for a batch of actions, shape (m,)."""
        self._check_fitted()
        A = check_actions(self.model_.space, X)
        return reward_batch(self.model_, A)

    def predict_pair_proba(self, X1, X2) -> np.ndarray:
        """Probability that each row of X1 is preferred to the same row of X2."""
        self._check_fitted()
        r1 = self.predict(X1)
        r2 = self.predict(X2)
        if r1.shape != r2.shape:
            raise ValueError("X1 and X2 must contain the same number of actions")
        gap = r1 - r2
        return np.where(gap >= 0, 1.0 / (1.0 + np.exp(-np.abs(gap))),
                        np.exp(-np.abs(gap)) / (1.0 + np.exp(-np.abs(gap))))

    def score(self, X: PreferenceDataset, y=None) -> float:
        """Mean probability assigned to the labeled preferred option over the
        non-tie records of a dataset (0.5 = uninformed)."""
        self._check_fitted()
        probs = []
        for rec in X:
            if rec.example_label is ExampleLabel.TIE:
                continue
            p = self.predict_pair_proba([rec.a1], [rec.a2])[0]
            probs.append(p if rec.example_label is ExampleLabel.PREFER_FIRST
                         else 1.0 - p)
        return float(np.mean(probs)) if probs else 0.5

    def score_against_ground_truth(self, gt, eval_pairs: int = 200,
                                   seed: int = 0) -> float:
        """GT-best probability of the fitted model (simulation domains only)."""
        self._check_fitted()
        domain = self.domain or DomainSpec(feature_space=self.model_.space,
                                           theta_value_set=(-1.0, 0.0, 1.0),
                                           label=CUSTOM)
        return eval_gt_best_prob(self.model_, gt, domain, eval_pairs, seed)
