"""Feature spaces, actions, ground-truth linear rewards, and the built-in domains.

An action is a plain length-n vector of floats (one coordinate per feature).
Discrete features take values from a declared set of numeric encodings;
continuous features range over a bounded interval. A ground-truth reward is a
linear weight vector over coordinates; zero weight means the feature never
affects the reward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MUSHROOM = "mushroom"
FLIGHT = "flight"
CUSTOM = "custom"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureSpec:
    """One named feature: either discrete (named values with numeric encodings)
    or continuous over [lower, upper]."""

    name: str
    kind: str  # "discrete" | "continuous"
    values: tuple[str, ...] = ()
    encodings: tuple[float, ...] = ()
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "discrete":
            if len(self.values) < 2:
                raise ValueError(f"discrete feature {self.name!r} needs >= 2 values")
            if len(set(self.values)) != len(self.values):
                raise ValueError(f"duplicate value names in feature {self.name!r}")
            if len(self.encodings) != len(self.values):
                raise ValueError(f"feature {self.name!r}: encodings must match values")
            if len(set(self.encodings)) != len(self.encodings):
                raise ValueError(f"feature {self.name!r}: encodings must be distinct")
        else:
            if not self.lower < self.upper:
                raise ValueError(f"feature {self.name!r}: lower must be < upper")

    @classmethod
    def discrete(cls, name: str, values: Sequence[str],
                 encodings: Sequence[float] | None = None) -> "FeatureSpec":
        if encodings is None:
            encodings = list(range(len(values)))
        return cls(name=name, kind="discrete", values=tuple(values),
                   encodings=tuple(float(e) for e in encodings))

    @classmethod
    def continuous(cls, name: str, lower: float = 0.0, upper: float = 1.0) -> "FeatureSpec":
        return cls(name=name, kind="continuous", lower=float(lower), upper=float(upper))

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def valid_value(self, x: float) -> bool:
        if self.is_discrete:
            return any(x == e for e in self.encodings)
        return self.lower <= x <= self.upper

    def value_name(self, x: float) -> str:
        """Human-readable name for an encoding (discrete) or the number itself."""
        if self.is_discrete:
            for name, enc in zip(self.values, self.encodings):
                if x == enc:
                    return name
            raise ValueError(f"{x!r} is not an encoding of feature {self.name!r}")
        return format(float(x), "g")


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered collection of features; index order is canonical and stable."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        if len(self.features) < 1:
            raise ValueError("a feature space needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for j, f in enumerate(self.features):
            if f.name == name:
                return j
        raise KeyError(name)

    def validate_action(self, values: Sequence[float]) -> np.ndarray:
        """Check a raw vector against the space and return it as a float array."""
        a = np.asarray(values, dtype=float)
        if a.shape != (self.n,):
            raise ValueError(f"action has shape {a.shape}, expected ({self.n},)")
        for j, feat in enumerate(self.features):
            if not feat.valid_value(a[j]):
                raise ValueError(
                    f"coordinate {j} ({feat.name}): {a[j]!r} is not a valid value")
        return a


def check_actions(space: FeatureSpace, X: Iterable[Sequence[float]]) -> np.ndarray:
    """Validate a batch of actions against a feature space.

    Returns a read-only (m, n) float array. Raises ValueError on any invalid row.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[1] != space.n:
        raise ValueError(f"expected actions of dimension {space.n}, got shape {X.shape}")
    for row in X:
        space.validate_action(row)
    return _readonly(X)


@dataclass(frozen=True)
class Context:
    """A set of candidate actions presented together for comparison."""

    actions: np.ndarray  # (size, n), read-only

    def __post_init__(self):
        object.__setattr__(self, "actions", _readonly(self.actions))
        if self.actions.ndim != 2 or self.actions.shape[0] < 1:
            raise ValueError("a context needs a non-empty (size, n) action array")

    @property
    def size(self) -> int:
        return self.actions.shape[0]


@dataclass
class ContextSampler:
    """Stateful sampler of contexts; each feature is drawn independently and
    uniformly over its encodings (discrete) or range (continuous).

    The same seed always yields the same context sequence.
    """

    context_size: int = 2
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.context_size < 2:
            raise ValueError("context_size must be >= 2")
        self._rng = np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class GroundTruthReward:
    """Hidden linear reward: theta weights per coordinate; a zero weight means
    the feature is irrelevant to this user's preference."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(self.theta))
        if self.theta.ndim != 1:
            raise ValueError("theta must be a 1-d vector")

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def relevant_set(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.theta))


@dataclass(frozen=True)
class DomainSpec:
    """A feature space plus the value set ground-truth weights are drawn from."""

    feature_space: FeatureSpace
    theta_value_set: tuple[float, ...]
    label: str = CUSTOM

    def __post_init__(self):
        if 0.0 not in self.theta_value_set:
            raise ValueError("theta_value_set must contain 0 so sparsity is expressible")

    @property
    def n(self) -> int:
        return self.feature_space.n

    def to_json(self) -> str:
        feats = []
        for f in self.feature_space.features:
            if f.is_discrete:
                feats.append({"name": f.name, "kind": "discrete",
                              "values": list(f.values), "encodings": list(f.encodings)})
            else:
                feats.append({"name": f.name, "kind": "continuous",
                              "lower": f.lower, "upper": f.upper})
        doc = {"label": self.label, "features": feats,
               "theta_value_set": list(self.theta_value_set)}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "DomainSpec":
        doc = json.loads(text)
        feats = []
        for fd in doc["features"]:
            if fd["kind"] == "discrete":
                feats.append(FeatureSpec.discrete(fd["name"], fd["values"], fd["encodings"]))
            else:
                feats.append(FeatureSpec.continuous(fd["name"], fd["lower"], fd["upper"]))
        return cls(feature_space=FeatureSpace(tuple(feats)),
                   theta_value_set=tuple(float(v) for v in doc["theta_value_set"]),
                   label=doc.get("label", CUSTOM))


# Encodings are symmetric around zero so a zero weight reads as true
# indifference and the sign of a weight is directly interpretable.
_MUSHROOM_ENCODINGS = (-1.0, 0.0, 1.0)

_MUSHROOM_FEATURES = (
    ("texture", ("smooth", "rough", "scaly")),
    ("color", ("green", "red", "brown")),
    ("shape", ("flat", "round", "conical")),
    ("height", ("short", "average", "tall")),
    ("weight", ("light", "medium", "heavy")),
    ("smell", ("stinky", "pleasant", "neutral")),
)


def make_mushroom_domain() -> DomainSpec:
    """Six discrete mushroom features, three named values each."""
    feats = tuple(FeatureSpec.discrete(name, values, _MUSHROOM_ENCODINGS)
                  for name, values in _MUSHROOM_FEATURES)
    return DomainSpec(feature_space=FeatureSpace(feats),
                      theta_value_set=(-2.0, -1.0, 0.0, 1.0, 2.0),
                      label=MUSHROOM)


def make_flight_domain() -> DomainSpec:
    """Eight flight features: four binary airline flags, four continuous
    attributes min-max normalized to [0, 1]."""
    feats = (
        FeatureSpec.continuous("arrival-time-before-meeting"),
        FeatureSpec.discrete("american", ("no", "yes"), (0.0, 1.0)),
        FeatureSpec.discrete("delta", ("no", "yes"), (0.0, 1.0)),
        FeatureSpec.discrete("jetblue", ("no", "yes"), (0.0, 1.0)),
        FeatureSpec.discrete("southwest", ("no", "yes"), (0.0, 1.0)),
        FeatureSpec.continuous("longest-stop"),
        FeatureSpec.continuous("number-of-stops"),
        FeatureSpec.continuous("price"),
    )
    return DomainSpec(feature_space=FeatureSpace(feats),
                      theta_value_set=(-1.0, -0.5, 0.0, 0.5, 1.0),
                      label=FLIGHT)


def sample_reward(domain: DomainSpec, relevant_count: int, rng_seed: int) -> GroundTruthReward:
    """Draw a ground-truth reward with exactly `relevant_count` nonzero weights.

    Relevant coordinates are chosen uniformly without replacement; each weight
    is drawn uniformly from the nonzero members of the domain's value set.
    """
    n = domain.n
    if not 1 <= relevant_count <= n:
        raise ValueError(f"relevant_count must be in [1, {n}], got {relevant_count}")
    rng = np.random.default_rng(rng_seed)
    nonzero = [v for v in domain.theta_value_set if v != 0.0]
    theta = np.zeros(n)
    relevant = rng.choice(n, size=relevant_count, replace=False)
    theta[relevant] = rng.choice(nonzero, size=relevant_count, replace=True)
    return GroundTruthReward(theta=theta)


def true_reward(gt: GroundTruthReward, a: Sequence[float]) -> float:
    """Ground-truth reward of an action: the dot product theta . a."""
    a = np.asarray(a, dtype=float)
    if a.shape != gt.theta.shape:
        raise ValueError(f"action has shape {a.shape}, expected {gt.theta.shape}")
    return float(gt.theta @ a)


def _sample_one(space: FeatureSpace, rng: np.random.Generator) -> np.ndarray:
    a = np.empty(space.n)
    for j, feat in enumerate(space.features):
        if feat.is_discrete:
            a[j] = feat.encodings[rng.integers(len(feat.encodings))]
        else:
            a[j] = rng.uniform(feat.lower, feat.upper)
    return a


def sample_context(domain: DomainSpec, sampler: ContextSampler) -> Context:
    """Draw the sampler's next context; duplicate actions are resampled so that
    every comparison carries signal."""
    space = domain.feature_space
    rows: list[np.ndarray] = []
    for _ in range(sampler.context_size):
        for _attempt in range(1000):
            a = _sample_one(space, sampler._rng)
            if not any(np.array_equal(a, r) for r in rows):
                rows.append(a)
                break
        else:
            raise ValueError(
                f"could not draw {sampler.context_size} distinct actions; "
                f"the space may be too small")
    return Context(actions=np.stack(rows))
