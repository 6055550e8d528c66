"""Experiment orchestration: per-condition training sets, training across
budgets and seeds, the best-option probability metric, flight-data ingestion,
and CSV output.

The metric scores a model by the two-option softmax probability it assigns to
the ground-truth-best action over fresh size-2 contexts; an uninformed model
scores exactly 0.5, a perfectly aligned one approaches 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .augment import AugmentMode, augment
from .data import ExampleLabel, PreferenceDataset, PreferenceRecord
from .domains import (
    ContextSampler,
    DomainSpec,
    GroundTruthReward,
    make_flight_domain,
    sample_context,
    sample_reward,
    true_reward,
)
from .model import (
    RewardModel,
    TrainConfig,
    TrainingFailure,
    _sigmoid,
    reward_batch,
    train,
)
from .oracle import Condition, OracleConfig, answer_query, oracle_relevance_mask
from .parsing import KEYWORD, LM, Lexicon, LmClientConfig, parse_keywords, parse_via_lm

ORACLE = "oracle"

#: Stream constant separating evaluation sampling from training sampling.
_EVAL_STREAM = 87178291199


class IngestionError(ValueError):
    """A malformed row in an external dataset file; carries the line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec
    condition: Condition
    relevant_count: int
    budgets: tuple[int, ...]
    seeds: tuple[int, ...]
    eval_pairs: int = 200
    train: TrainConfig = field(default_factory=TrainConfig)
    augment_mode: AugmentMode = AugmentMode.SEEN_VALUES
    mask_source: str = ORACLE
    reward_seed: int = 0
    lexicon: Lexicon | None = None
    lm_client: LmClientConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.budgets or any(b2 <= b1 for b1, b2
                                   in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be a non-empty strictly increasing list")
        if self.budgets[0] < 1:
            raise ValueError("budgets must be >= 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.eval_pairs < 1:
            raise ValueError("eval_pairs must be >= 1")
        if not 1 <= self.relevant_count <= self.domain.n:
            raise ValueError(f"relevant_count must be in [1, {self.domain.n}]")
        if self.mask_source not in (ORACLE, KEYWORD, LM):
            raise ValueError(f"unknown mask source {self.mask_source!r}")
        if self.mask_source == LM and self.lm_client is None:
            raise ValueError("mask_source 'lm' needs an lm_client")


@dataclass(frozen=True)
class RunRow:
    condition: Condition
    seed: int
    budget: int
    gt_best_prob: float
    n_train_records: int
    n_synth_records: int


@dataclass(frozen=True)
class BudgetAggregate:
    budget: int
    mean: float
    stderr: float


@dataclass(frozen=True)
class EvalResult:
    condition: Condition
    rows: tuple[RunRow, ...]
    aggregates: tuple[BudgetAggregate, ...]

    def mean_at(self, budget: int) -> float:
        for agg in self.aggregates:
            if agg.budget == budget:
                return agg.mean
        raise KeyError(budget)

    def to_csv(self) -> str:
        lines = ["condition,seed,budget,gt_best_prob,n_train_records,n_synth_records"]
        for r in self.rows:
            lines.append(f"{r.condition.value},{r.seed},{r.budget},"
                         f"{r.gt_best_prob!r},{r.n_train_records},{r.n_synth_records}")
        for agg in self.aggregates:
            lines.append(f"{self.condition.value},mean,{agg.budget},{agg.mean!r},,")
            lines.append(f"{self.condition.value},stderr,{agg.budget},{agg.stderr!r},,")
        return "\n".join(lines) + "\n"


def describe_reward(gt: GroundTruthReward, domain: DomainSpec) -> str:
    """Canonical description of a reward: the relevant features by name."""
    names = domain.feature_space.names
    return ", ".join(names[j] for j in gt.relevant_set)


def _resolve_mask(gt: GroundTruthReward, domain: DomainSpec,
                  cfg: ExperimentConfig) -> tuple[tuple[bool, ...], str | None]:
    if cfg.mask_source == ORACLE:
        return oracle_relevance_mask(gt), None
    utterance = describe_reward(gt, domain)
    if cfg.mask_source == KEYWORD:
        return parse_keywords(utterance, domain, cfg.lexicon).mask, utterance
    return parse_via_lm(utterance, domain, cfg.lm_client).mask, utterance


def build_training_set(gt: GroundTruthReward, domain: DomainSpec,
                       condition: Condition, budget: int,
                       cfg: ExperimentConfig, seed: int) -> PreferenceDataset:
    """Sample and label `budget` size-2 comparisons; pragmatic conditions are
    augmented before returning.

    Deterministic under the seed, and prefix-consistent: the budget-b set is
    a prefix of the budget-(b+1) set (before augmentation).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    mask: tuple[bool, ...] | None = None
    utterance: str | None = None
    if condition in (Condition.PRAG_RLHF, Condition.PRAG_FP):
        mask, utterance = _resolve_mask(gt, domain, cfg)
    sampler = ContextSampler(context_size=2, rng_seed=seed)
    oracle_cfg = OracleConfig()
    records = []
    for _ in range(budget):
        ctx = sample_context(domain, sampler)
        rec = answer_query(gt, ctx.actions[0], ctx.actions[1], condition,
                           oracle_cfg, mask=mask)
        if utterance is not None:
            rec = replace(rec, utterance=utterance)
        records.append(rec)
    dataset = PreferenceDataset(tuple(records), domain.feature_space)
    if condition in (Condition.PRAG_RLHF, Condition.PRAG_FP):
        dataset = augment(dataset, cfg.augment_mode)
    return dataset


def _eval_contexts(gt: GroundTruthReward, domain: DomainSpec,
                   eval_pairs: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Best/other action pairs over fresh contexts; ties under the ground
    truth are skipped. The stream depends only on the seed, so evaluation sets
    are identical across conditions and budgets."""
    eval_seed = int(np.random.SeedSequence([seed, _EVAL_STREAM]).generate_state(1)[0])
    sampler = ContextSampler(context_size=2, rng_seed=eval_seed)
    best, other = [], []
    for _ in range(eval_pairs):
        ctx = sample_context(domain, sampler)
        r1 = true_reward(gt, ctx.actions[0])
        r2 = true_reward(gt, ctx.actions[1])
        if r1 == r2:
            continue
        hi, lo = (0, 1) if r1 > r2 else (1, 0)
        best.append(ctx.actions[hi])
        other.append(ctx.actions[lo])
    if not best:
        return np.zeros((0, domain.n)), np.zeros((0, domain.n))
    return np.stack(best), np.stack(other)


def _mean_best_prob(model: RewardModel, best: np.ndarray, other: np.ndarray) -> float:
    if best.shape[0] == 0:
        return 0.5
    gap = reward_batch(model, best) - reward_batch(model, other)
    return float(np.mean(_sigmoid(gap)))


def eval_gt_best_prob(model: RewardModel, gt: GroundTruthReward, domain: DomainSpec,
                      eval_pairs: int = 200, seed: int = 0) -> float:
    """Mean probability the model assigns to the ground-truth-best action over
    fresh size-2 contexts (evaluation stream, disjoint from training)."""
    if eval_pairs < 1:
        raise ValueError("eval_pairs must be >= 1")
    best, other = _eval_contexts(gt, domain, eval_pairs, seed)
    return _mean_best_prob(model, best, other)


def run_experiment(config: ExperimentConfig,
                   out_path: str | Path | None = None) -> EvalResult:
    """Train and evaluate one condition across the full (seed, budget) grid.

    Every budget retrains from scratch on the regenerated (prefix-consistent)
    training set. Writes the CSV when a path is given; output bytes are a pure
    function of the config.
    """
    domain = config.domain
    gt = sample_reward(domain, config.relevant_count, config.reward_seed)
    rows: list[RunRow] = []
    for seed in config.seeds:
        train_cfg = replace(config.train, rng_seed=config.train.rng_seed + seed)
        best, other = _eval_contexts(gt, domain, config.eval_pairs, seed)
        for budget in config.budgets:
            dataset = build_training_set(gt, domain, config.condition, budget,
                                         config, seed)
            try:
                model = train(dataset, domain, train_cfg)
            except TrainingFailure as exc:
                raise TrainingFailure(
                    exc.epoch,
                    f"training diverged at epoch {exc.epoch} "
                    f"(seed {seed}, budget {budget})") from exc
            rows.append(RunRow(
                condition=config.condition,
                seed=seed,
                budget=budget,
                gt_best_prob=_mean_best_prob(model, best, other),
                n_train_records=len(dataset),
                n_synth_records=dataset.n_synthesized,
            ))
    aggregates = []
    for budget in config.budgets:
        vals = np.array([r.gt_best_prob for r in rows if r.budget == budget])
        stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        aggregates.append(BudgetAggregate(budget=budget, mean=float(np.mean(vals)),
                                          stderr=stderr))
    result = EvalResult(condition=config.condition, rows=tuple(rows),
                        aggregates=tuple(aggregates))
    if out_path is not None:
        Path(out_path).write_text(result.to_csv())
    return result


@dataclass(frozen=True)
class IngestionResult:
    """Converted dataset plus bookkeeping from a flight-record file."""

    dataset: PreferenceDataset
    groups: int  # distinct reward functions seen
    warnings: tuple[str, ...]


def convert_triples_to_pairs(path: str | Path,
                             domain: DomainSpec | None = None,
                             mask_source: str = KEYWORD,
                             lexicon: Lexicon | None = None,
                             lm_client: LmClientConfig | None = None) -> IngestionResult:
    """Convert three-option choice rows into pairwise comparisons.

    Each row ``{"options": [[..] x3], "best": 0|1|2, "utterance": str,
    "theta": [..]}`` yields two records: best beats each of the other two,
    both carrying the row's utterance and a parsed relevance mask.
    """
    domain = domain or make_flight_domain()
    records: list[PreferenceRecord] = []
    warnings: list[str] = []
    thetas: set[tuple[float, ...]] = set()
    parse_cache: dict[str, tuple[bool, ...]] = {}

    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestionError(line_no, f"invalid JSON ({exc.msg})") from None
        try:
            options = row["options"]
            best = row["best"]
            utterance = row["utterance"]
            theta = tuple(float(t) for t in row["theta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(line_no, f"missing or malformed field ({exc})") from None
        if not isinstance(options, list) or len(options) != 3:
            raise IngestionError(line_no, "expected exactly 3 options")
        if best not in (0, 1, 2):
            raise IngestionError(line_no, f"best index {best!r} not in 0..2")
        if len(theta) != domain.n:
            raise IngestionError(line_no, f"theta must have {domain.n} entries")
        try:
            acts = [tuple(float(x) for x in domain.feature_space.validate_action(opt))
                    for opt in options]
        except ValueError as exc:
            raise IngestionError(line_no, str(exc)) from None
        if len(set(acts)) < 3:
            warnings.append(f"line {line_no}: duplicate options")
        thetas.add(theta)

        if mask_source == ORACLE:
            mask = tuple(t != 0.0 for t in theta)
        elif mask_source in (KEYWORD, LM):
            if utterance not in parse_cache:
                if mask_source == KEYWORD:
                    parse_cache[utterance] = parse_keywords(utterance, domain,
                                                            lexicon).mask
                else:
                    if lm_client is None:
                        raise ValueError("mask_source 'lm' needs an lm_client")
                    parse_cache[utterance] = parse_via_lm(utterance, domain,
                                                          lm_client).mask
            mask = parse_cache[utterance]
        else:
            raise ValueError(f"unknown mask source {mask_source!r}")
        for loser in (i for i in range(3) if i != best):
            records.append(PreferenceRecord(
                a1=acts[best], a2=acts[loser],
                example_label=ExampleLabel.PREFER_FIRST,
                mask=mask, utterance=utterance))
    dataset = PreferenceDataset(tuple(records), domain.feature_space)
    return IngestionResult(dataset=dataset, groups=len(thetas),
                           warnings=tuple(warnings))
