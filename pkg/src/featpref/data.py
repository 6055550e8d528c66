"""Preference records and datasets.

A record compares two actions: an example-level label over the whole pair,
optional per-feature labels, an optional relevance mask marking which features
drove the preference, and an optional free-text description. Synthesized
records are products of augmentation and never carry a mask or utterance.

JSONL wire format, one record per line::

    {"a1": [..], "a2": [..], "label": 1|-1|0,
     "feature_labels": [{"j": int, "label": 1|-1|0}],
     "mask": [0|1, ..] | null, "utterance": "..." | null, "synthesized": false}

Label encoding: 1 = first preferred, -1 = second preferred, 0 = tie.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator

from .domains import FeatureSpace


class ExampleLabel(IntEnum):
    """Preference over a whole pair of actions."""

    PREFER_FIRST = 1
    PREFER_SECOND = -1
    TIE = 0


class FeatureLabel(IntEnum):
    """Preference over one feature's values across the pair; NONE means the
    answerer is indifferent on that feature."""

    PREFER_FIRST = 1
    PREFER_SECOND = -1
    NONE = 0


@dataclass(frozen=True)
class FeaturePref:
    """A feature-level label attached to one coordinate of the pair."""

    feature_index: int
    label: FeatureLabel

    def __post_init__(self):
        if self.feature_index < 0:
            raise ValueError("feature_index must be non-negative")


@dataclass(frozen=True)
class PreferenceRecord:
    """One labeled comparison between two actions."""

    a1: tuple[float, ...]
    a2: tuple[float, ...]
    example_label: ExampleLabel
    feature_labels: tuple[FeaturePref, ...] = ()
    mask: tuple[bool, ...] | None = None
    utterance: str | None = None
    synthesized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a1", tuple(float(x) for x in self.a1))
        object.__setattr__(self, "a2", tuple(float(x) for x in self.a2))
        if len(self.a1) != len(self.a2):
            raise ValueError("a1 and a2 must have the same dimension")
        n = len(self.a1)
        seen: set[int] = set()
        for fp in self.feature_labels:
            if fp.feature_index >= n:
                raise ValueError(f"feature index {fp.feature_index} out of range for n={n}")
            if fp.feature_index in seen:
                raise ValueError(f"duplicate feature label for index {fp.feature_index}")
            seen.add(fp.feature_index)
        if self.mask is not None:
            object.__setattr__(self, "mask", tuple(bool(b) for b in self.mask))
            if len(self.mask) != n:
                raise ValueError(f"mask length {len(self.mask)} != action dimension {n}")
        if self.synthesized and (self.mask is not None or self.utterance is not None):
            raise ValueError("synthesized records carry no mask or utterance")

    @property
    def n(self) -> int:
        return len(self.a1)

    def flipped(self) -> "PreferenceRecord":
        """Swap the two actions and negate every label (the same comparison
        written the other way around)."""
        return replace(
            self,
            a1=self.a2,
            a2=self.a1,
            example_label=ExampleLabel(-int(self.example_label)),
            feature_labels=tuple(
                FeaturePref(fp.feature_index, FeatureLabel(-int(fp.label)))
                for fp in self.feature_labels),
        )


@dataclass(frozen=True)
class PreferenceDataset:
    """An ordered collection of records over one feature space."""

    records: tuple[PreferenceRecord, ...]
    feature_space: FeatureSpace

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        n = self.feature_space.n
        for i, rec in enumerate(self.records):
            if rec.n != n:
                raise ValueError(f"record {i} has dimension {rec.n}, expected {n}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PreferenceRecord]:
        return iter(self.records)

    @property
    def n_synthesized(self) -> int:
        return sum(1 for r in self.records if r.synthesized)

    @property
    def n_raw(self) -> int:
        return len(self.records) - self.n_synthesized

    def extended(self, extra: Iterable[PreferenceRecord]) -> "PreferenceDataset":
        return PreferenceDataset(self.records + tuple(extra), self.feature_space)


def record_to_json(rec: PreferenceRecord) -> str:
    doc = {
        "a1": list(rec.a1),
        "a2": list(rec.a2),
        "label": int(rec.example_label),
        "feature_labels": [{"j": fp.feature_index, "label": int(fp.label)}
                           for fp in rec.feature_labels],
        "mask": [int(b) for b in rec.mask] if rec.mask is not None else None,
        "utterance": rec.utterance,
        "synthesized": rec.synthesized,
    }
    return json.dumps(doc)


def record_from_json(line: str) -> PreferenceRecord:
    doc = json.loads(line)
    return PreferenceRecord(
        a1=tuple(doc["a1"]),
        a2=tuple(doc["a2"]),
        example_label=ExampleLabel(doc["label"]),
        feature_labels=tuple(FeaturePref(fp["j"], FeatureLabel(fp["label"]))
                             for fp in doc.get("feature_labels", ())),
        mask=tuple(bool(b) for b in doc["mask"]) if doc.get("mask") is not None else None,
        utterance=doc.get("utterance"),
        synthesized=bool(doc.get("synthesized", False)),
    )


def dataset_to_jsonl(dataset: PreferenceDataset) -> str:
    return "".join(record_to_json(rec) + "\n" for rec in dataset)


def save_jsonl(dataset: PreferenceDataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_jsonl(dataset))


def load_jsonl(path: str | Path, feature_space: FeatureSpace) -> PreferenceDataset:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(record_from_json(line))
    return PreferenceDataset(tuple(records), feature_space)


def records_from_jsonl_text(text: str) -> list[PreferenceRecord]:
    return [record_from_json(line) for line in text.splitlines() if line.strip()]
