"""Turn free-text preference descriptions into relevance masks.

The default route is a deterministic keyword lexicon: a feature is marked
relevant iff one of its trigger phrases occurs in the (lowercased) utterance,
and every unmentioned feature is treated as irrelevant. An optional HTTP
client can delegate the same job to an external language-model service.

Trigger phrase syntax:

* single word        -- matches if any token of the utterance starts with it
                        ("stop" matches "stops", "long" matches "longest")
* words joined by +  -- every word must match a token, all within a 3-token
                        window ("more+stop" matches "more stops" and
                        "more of the stops" but not distant co-occurrence)
* multi-word phrase  -- plain substring match ("jet blue")

Lexicons load from JSON as ``{"feature_name": ["phrase", ...], ...}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import requests

from .domains import FLIGHT, MUSHROOM, DomainSpec

KEYWORD = "keyword"
LM = "lm"

_WINDOW = 3  # max token distance between the words of a compound trigger


class LmServiceUnavailable(RuntimeError):
    """The language-model endpoint could not be reached within the retry budget."""


class LmProtocolError(RuntimeError):
    """The language-model endpoint answered with something other than a valid
    mask; carries the raw response body."""

    def __init__(self, message: str, body: str):
        super().__init__(f"{message}: {body!r}")
        self.body = body


@dataclass(frozen=True)
class Lexicon:
    """Per-feature trigger phrases for one domain."""

    triggers: dict[str, tuple[str, ...]]

    def __post_init__(self):
        object.__setattr__(self, "triggers",
                           {k: tuple(p.lower() for p in v)
                            for k, v in self.triggers.items()})
        for feature, phrases in self.triggers.items():
            if not phrases:
                raise ValueError(f"feature {feature!r} has no trigger phrases")
            if any(not p.strip() for p in phrases):
                raise ValueError(f"feature {feature!r} has an empty trigger phrase")

    def for_domain(self, domain: DomainSpec) -> dict[str, tuple[str, ...]]:
        missing = [name for name in domain.feature_space.names
                   if name not in self.triggers]
        if missing:
            raise ValueError(f"lexicon lacks trigger phrases for {missing}")
        return {name: self.triggers[name] for name in domain.feature_space.names}

    def to_json(self) -> str:
        return json.dumps({k: list(v) for k, v in self.triggers.items()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Lexicon":
        return cls(triggers={k: tuple(v) for k, v in json.loads(text).items()})

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class ParseResult:
    mask: tuple[bool, ...]
    source: str  # KEYWORD | LM
    matched_phrases: tuple[tuple[str, ...], ...] = ()


FLIGHT_LEXICON = Lexicon(triggers={
    "arrival-time-before-meeting": (
        "arrival", "arrive", "before+meeting", "make+meeting", "on time", "early"),
    "american": ("american",),
    "delta": ("delta",),
    "jetblue": ("jetblue", "jet blue"),
    "southwest": ("southwest", "south west"),
    "longest-stop": ("long+stop", "length+stop", "short+stop", "duration+stop",
                     "layover"),
    "number-of-stops": ("number+stop", "fewest+stop", "fewer+stop", "more+stop",
                        "most+stop", "many+stop", "nonstop", "direct"),
    "price": ("price", "cheap", "expensive", "cost"),
})

MUSHROOM_LEXICON = Lexicon(triggers={
    "texture": ("texture", "smooth", "rough", "scaly"),
    "color": ("color", "colour", "green", "red", "brown"),
    "shape": ("shape", "flat", "round", "conical"),
    "height": ("height", "short", "average", "tall"),
    "weight": ("weight", "light", "medium", "heavy"),
    "smell": ("smell", "stinky", "pleasant", "neutral"),
})


def default_lexicon(domain: DomainSpec) -> Lexicon:
    if domain.label == FLIGHT:
        return FLIGHT_LEXICON
    if domain.label == MUSHROOM:
        return MUSHROOM_LEXICON
    # fall back to feature names themselves
    return Lexicon(triggers={name: (name.lower(),)
                             for name in domain.feature_space.names})


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _phrase_matches(phrase: str, text: str, tokens: list[str]) -> bool:
    if "+" in phrase:
        words = phrase.split("+")
        positions = [[i for i, t in enumerate(tokens) if t.startswith(w)]
                     for w in words]
        if any(not p for p in positions):
            return False
        for combo in product(*positions):
            if len(set(combo)) == len(combo) and max(combo) - min(combo) <= _WINDOW:
                return True
        return False
    if " " in phrase:
        return phrase in text
    return any(t.startswith(phrase) for t in tokens)


def parse_keywords(utterance: str, domain: DomainSpec,
                   lexicon: Lexicon | None = None) -> ParseResult:
    """Mark a feature relevant iff one of its trigger phrases occurs in the
    utterance; everything unmentioned is irrelevant."""
    lexicon = lexicon or default_lexicon(domain)
    triggers = lexicon.for_domain(domain)
    text = utterance.lower()
    tokens = _tokens(text)
    mask = []
    matched = []
    for name in domain.feature_space.names:
        hits = tuple(p for p in triggers[name] if _phrase_matches(p, text, tokens))
        mask.append(bool(hits))
        matched.append(hits)
    return ParseResult(mask=tuple(mask), source=KEYWORD,
                       matched_phrases=tuple(matched))


DEFAULT_PROMPT_TEMPLATE = (
    "A user described their preferences: \"{utterance}\"\n"
    "The candidate features are: {feature_list}.\n"
    "Answer with a JSON object {{\"mask\": [...]}} containing one 0/1 entry per "
    "feature, 1 when the description marks the feature as relevant."
)


@dataclass(frozen=True)
class LmClientConfig:
    endpoint: str
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    timeout_s: float = 10.0
    max_retries: int = 2

    def __post_init__(self):
        for placeholder in ("{utterance}", "{feature_list}"):
            if placeholder not in self.prompt_template:
                raise ValueError(f"prompt template must contain {placeholder}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def parse_via_lm(utterance: str, domain: DomainSpec,
                 client: LmClientConfig) -> ParseResult:
    """Ask an external service for the relevance mask.

    Sends ``POST endpoint`` with body ``{"prompt": ...}`` and expects
    ``{"mask": [0|1 x n]}`` back. Unreachable service (after retries) raises
    LmServiceUnavailable; a malformed answer raises LmProtocolError. A failed
    call never silently degrades to an all-false mask.
    """
    prompt = client.prompt_template.format(
        utterance=utterance,
        feature_list=", ".join(domain.feature_space.names))
    last_error: Exception | None = None
    for _attempt in range(client.max_retries + 1):
        try:
            resp = requests.post(client.endpoint, json={"prompt": prompt},
                                 timeout=client.timeout_s)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_error = exc
            continue
        if resp.status_code != 200:
            last_error = RuntimeError(f"HTTP {resp.status_code}")
            continue
        return ParseResult(mask=_validate_mask(resp.text, domain.n), source=LM)
    raise LmServiceUnavailable(
        f"no valid answer from {client.endpoint} after "
        f"{client.max_retries + 1} attempts: {last_error}")


def _validate_mask(body: str, n: int) -> tuple[bool, ...]:
    try:
        doc = json.loads(body)
    except json.JSONDecodeError:
        raise LmProtocolError("response is not JSON", body) from None
    if not isinstance(doc, dict) or "mask" not in doc:
        raise LmProtocolError("response lacks a 'mask' field", body)
    mask = doc["mask"]
    if not isinstance(mask, list) or len(mask) != n:
        raise LmProtocolError(f"mask must be a list of length {n}", body)
    if any(v not in (0, 1) for v in mask):
        raise LmProtocolError("mask entries must be 0 or 1", body)
    return tuple(bool(v) for v in mask)
