"""Pragmatic preference-data augmentation.

A record whose relevance mask marks some features irrelevant implicitly claims
the preference would not change if those features' values were different. We
expand the dataset accordingly: for every non-empty subset of the irrelevant
coordinates where the two actions differ, synthesize a new pair with those
values exchanged and the original label kept.

Two modes govern which values the synthesized pairs may take:

* SEEN_VALUES (default, cautious): only exchange the values actually observed
  in the pair, i.e. the features are treated as irrelevant for these specific
  values. Per record this yields 2^k - 1 synthesized pairs, k = number of
  irrelevant coordinates on which the actions differ.
* ANY_VALUE: the features are treated as irrelevant in general; every
  irrelevant coordinate may take any declared encoding on either side.
  Supported for discrete features only, and combinatorially much larger.
"""

from __future__ import annotations

import math
from enum import Enum
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .data import PreferenceDataset, PreferenceRecord
from .domains import FeatureSpace

#: Sentinel for a masked-out (irrelevant) coordinate.
MASKED = math.nan

#: One synthesized-pair plan: coordinate -> (new a1 value, new a2 value).
SwapPlan = dict[int, tuple[float, float]]


class AugmentMode(Enum):
    SEEN_VALUES = "seen"
    ANY_VALUE = "any"

    @classmethod
    def parse(cls, text: str) -> "AugmentMode":
        for m in cls:
            if m.value == text.lower():
                return m
        raise ValueError(f"unknown augment mode {text!r}; expected 'seen' or 'any'")


def mask_irrelevant(record: PreferenceRecord) -> tuple[np.ndarray, np.ndarray]:
    """Copies of the record's actions with irrelevant coordinates blanked out."""
    if record.mask is None:
        raise ValueError("record has no relevance mask")
    m1 = np.array(record.a1, dtype=float)
    m2 = np.array(record.a2, dtype=float)
    for j, relevant in enumerate(record.mask):
        if not relevant:
            m1[j] = MASKED
            m2[j] = MASKED
    return m1, m2


def _swappable(masked_a1: np.ndarray, original_a1: Sequence[float],
               original_a2: Sequence[float]) -> list[int]:
    # Masked coordinates where the pair actually differs; swapping equal
    # values would only reproduce existing records.
    return [j for j in range(len(masked_a1))
            if math.isnan(masked_a1[j]) and original_a1[j] != original_a2[j]]


def feat_combos(masked_a1: np.ndarray, masked_a2: np.ndarray,
                original_a1: Sequence[float], original_a2: Sequence[float],
                mode: AugmentMode = AugmentMode.SEEN_VALUES,
                space: FeatureSpace | None = None) -> list[SwapPlan]:
    """Enumerate the synthesized-pair plans for one masked record.

    SEEN_VALUES returns one plan per non-empty subset of the swappable
    coordinates (ordered by subset size, then lexicographically); each plan
    exchanges the two observed values at those coordinates. ANY_VALUE needs
    `space` and enumerates every assignment of the masked coordinates to the
    declared encodings, minus the original pair and any assignment that would
    make the two actions identical.
    """
    if mode is AugmentMode.SEEN_VALUES:
        swappable = _swappable(masked_a1, original_a1, original_a2)
        plans: list[SwapPlan] = []
        for size in range(1, len(swappable) + 1):
            for subset in combinations(swappable, size):
                plans.append({j: (float(original_a2[j]), float(original_a1[j]))
                              for j in subset})
        return plans

    if space is None:
        raise ValueError("ANY_VALUE mode needs the feature space for its encodings")
    masked = [j for j in range(len(masked_a1)) if math.isnan(masked_a1[j])]
    for j in masked:
        if not space.features[j].is_discrete:
            raise ValueError(
                f"ANY_VALUE cannot enumerate continuous feature "
                f"{space.features[j].name!r}")
    choice_sets = [
        [(v1, v2) for v1 in space.features[j].encodings
         for v2 in space.features[j].encodings]
        for j in masked
    ]
    plans = []
    for assignment in product(*choice_sets):
        plan = {j: vals for j, vals in zip(masked, assignment)
                if vals != (original_a1[j], original_a2[j])}
        if not plan:
            continue  # reproduces the original pair
        a1_new = [plan[j][0] if j in plan else original_a1[j]
                  for j in range(len(original_a1))]
        a2_new = [plan[j][1] if j in plan else original_a2[j]
                  for j in range(len(original_a2))]
        if a1_new == a2_new:
            continue  # identical actions carry no signal
        plans.append(plan)
    unique: list[SwapPlan] = []
    seen = set()
    for plan in sorted(plans, key=lambda p: (len(p), sorted(p.items()))):
        key = tuple(sorted(plan.items()))
        if key not in seen:
            seen.add(key)
            unique.append(plan)
    return unique


def _apply_plan(record: PreferenceRecord, plan: SwapPlan) -> PreferenceRecord:
    a1 = list(record.a1)
    a2 = list(record.a2)
    for j, (v1, v2) in plan.items():
        a1[j] = v1
        a2[j] = v2
    mask = record.mask
    labels = tuple(fp for fp in record.feature_labels if mask[fp.feature_index])
    return PreferenceRecord(
        a1=tuple(a1), a2=tuple(a2),
        example_label=record.example_label,
        feature_labels=labels,
        synthesized=True,
    )


def _dedup_key(record: PreferenceRecord):
    return (record.a1, record.a2, record.example_label,
            tuple(sorted((fp.feature_index, fp.label) for fp in record.feature_labels)))


def augment(dataset: PreferenceDataset,
            mode: AugmentMode = AugmentMode.SEEN_VALUES) -> PreferenceDataset:
    """Expand a dataset with synthesized irrelevant-feature swaps.

    Every masked record contributes one synthesized record per plan from
    feat_combos; records without masks pass through untouched. Synthesized
    records keep the source's example label and its feature labels for
    relevant coordinates, and are deduplicated against everything already in
    the output. Output order is deterministic: all originals first, then each
    record's synthesized pairs in plan order.
    """
    seen = {_dedup_key(rec) for rec in dataset}
    synthesized: list[PreferenceRecord] = []
    for record in dataset:
        if record.mask is None:
            continue
        m1, m2 = mask_irrelevant(record)
        for plan in feat_combos(m1, m2, record.a1, record.a2, mode,
                                space=dataset.feature_space):
            new = _apply_plan(record, plan)
            key = _dedup_key(new)
            if key not in seen:
                seen.add(key)
                synthesized.append(new)
    return dataset.extended(synthesized)
