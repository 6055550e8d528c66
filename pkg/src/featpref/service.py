"""HTTP elicitation service: serves preference queries, accepts human answers
(example choice, per-feature choices, free-text description), retrains the
session's reward model after every response, and reports model snapshots.

Sessions are in-memory; per-session requests are serialized by a lock, and the
linear model retrains fast enough to keep the response synchronous. An
exported session (dataset JSONL + checkpoint + raw responses) replayed into a
fresh session with the same seed reproduces the same model bit for bit.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .augment import augment
from .data import (
    ExampleLabel,
    FeatureLabel,
    FeaturePref,
    PreferenceDataset,
    PreferenceRecord,
    dataset_to_jsonl,
)
from .domains import (
    ContextSampler,
    DomainSpec,
    GroundTruthReward,
    make_flight_domain,
    make_mushroom_domain,
    sample_context,
    sample_reward,
)
from .harness import _eval_contexts, _mean_best_prob
from .model import RewardModel, TrainConfig, init_model, save_checkpoint, train
from .oracle import Condition
from .parsing import parse_keywords

PRACTICE = "practice"
FREE = "free"


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail


class CreateSessionBody(BaseModel):
    domain: str = "mushroom"
    condition: str = "prag-fp"
    mode: str = PRACTICE
    seed: int = 0
    relevant_count: int = 1
    beta: float = 0.5
    learning_rate: float = 0.002
    epochs: int = 1500


class ResponseBody(BaseModel):
    query_id: str
    example_choice: str
    feature_choices: dict[str, str] | None = None
    description: str | None = None


@dataclass
class Session:
    id: str
    domain: DomainSpec
    condition: Condition
    mode: str
    seed: int
    train_config: TrainConfig
    gt: GroundTruthReward | None
    sampler: ContextSampler
    model: RewardModel
    records: list[PreferenceRecord] = field(default_factory=list)
    responses: list[dict] = field(default_factory=list)
    history: list[str] = field(default_factory=list)
    current_query: dict | None = None
    query_counter: int = 0
    eval_pairs: tuple = ()
    lock: threading.Lock = field(default_factory=threading.Lock)
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)


def _domain_by_label(label: str) -> DomainSpec:
    if label == "mushroom":
        return make_mushroom_domain()
    if label == "flight":
        return make_flight_domain()
    raise ApiError(400, "unknown-domain", f"unknown domain {label!r}")


def _answer_kinds(condition: Condition) -> dict:
    return {
        "example": True,
        "features": {"fp": "all", "prag-fp": "optional"}.get(condition.value, "none"),
        "description": condition in (Condition.PRAG_RLHF, Condition.PRAG_FP),
    }


def _snapshot(session: Session) -> dict:
    feature_rewards = []
    for j, feat in enumerate(session.domain.feature_space.features):
        if feat.is_discrete:
            values = {name: float(session.model.predictors[j][i])
                      for i, name in enumerate(feat.values)}
            feature_rewards.append({"feature": feat.name, "values": values})
        else:
            feature_rewards.append({"feature": feat.name,
                                    "weight": float(session.model.predictors[j][0])})
    gt_best = None
    if session.gt is not None:
        best, other = session.eval_pairs
        gt_best = _mean_best_prob(session.model, best, other)
    n_synth = sum(1 for r in session.records if r.synthesized)
    return {
        "combiner": [float(x) for x in session.model.combiner],
        "feature_rewards": feature_rewards,
        "gt_best_probability": gt_best,
        "n_records": len(session.records) - n_synth,
        "n_synthesized": n_synth,
        "n_responses": len(session.responses),
    }


def _current_dataset(session: Session) -> PreferenceDataset:
    return PreferenceDataset(tuple(session.records), session.domain.feature_space)


def _retrain(session: Session) -> None:
    dataset = _current_dataset(session)
    if len(dataset) == 0:
        session.model = init_model(session.domain, session.train_config)
    else:
        session.model = train(dataset, session.domain, session.train_config)
    session.updated_at = time.time()


def _build_record(session: Session, body: ResponseBody) -> PreferenceRecord:
    query = session.current_query
    a1 = tuple(query["option_values"]["a"])
    a2 = tuple(query["option_values"]["b"])
    if body.example_choice not in ("first", "second"):
        raise ApiError(400, "validation-error",
                       "example_choice must be 'first' or 'second'")
    example = (ExampleLabel.PREFER_FIRST if body.example_choice == "first"
               else ExampleLabel.PREFER_SECOND)
    names = session.domain.feature_space.names
    choices = body.feature_choices or {}
    for name, choice in choices.items():
        if name not in names:
            raise ApiError(400, "validation-error", f"unknown feature {name!r}")
        if choice not in ("first", "second", "skip"):
            raise ApiError(400, "validation-error",
                           f"feature choice for {name!r} must be "
                           f"first/second/skip")

    def label_of(name: str) -> FeatureLabel:
        return {"first": FeatureLabel.PREFER_FIRST,
                "second": FeatureLabel.PREFER_SECOND,
                "skip": FeatureLabel.NONE}[choices.get(name, "skip")]

    condition = session.condition
    if condition is Condition.RLHF:
        return PreferenceRecord(a1, a2, example)

    if condition is Condition.FP:
        missing = [name for name in names if name not in choices]
        if missing:
            raise ApiError(400, "validation-error",
                           f"feature_choices required for all features; "
                           f"missing {missing}")
        labels = tuple(FeaturePref(j, label_of(name))
                       for j, name in enumerate(names))
        return PreferenceRecord(a1, a2, example, feature_labels=labels)

    if not body.description or not body.description.strip():
        raise ApiError(400, "validation-error",
                       "description is required for pragmatic conditions")
    mask = parse_keywords(body.description, session.domain).mask
    if condition is Condition.PRAG_RLHF:
        return PreferenceRecord(a1, a2, example, mask=mask,
                                utterance=body.description)
    labels = tuple(FeaturePref(j, label_of(names[j]))
                   for j in range(len(names)) if mask[j])
    return PreferenceRecord(a1, a2, example, feature_labels=labels, mask=mask,
                            utterance=body.description)


def create_app() -> FastAPI:
    app = FastAPI(title="featpref elicitation service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request, exc: RequestValidationError):
        missing = [" -> ".join(str(p) for p in err["loc"]) for err in exc.errors()]
        return JSONResponse(status_code=400,
                            content={"error": "validation-error",
                                     "detail": f"invalid request: {missing}"})

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise ApiError(404, "unknown-session", f"no session {sid!r}")
        return session

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        domain = _domain_by_label(body.domain)
        try:
            condition = Condition.parse(body.condition)
        except ValueError as exc:
            raise ApiError(400, "unknown-condition", str(exc)) from None
        if body.mode not in (PRACTICE, FREE):
            raise ApiError(400, "unknown-mode",
                           f"mode must be '{PRACTICE}' or '{FREE}'")
        train_config = TrainConfig(beta=body.beta,
                                   learning_rate=body.learning_rate,
                                   epochs=body.epochs, rng_seed=body.seed)
        gt = None
        eval_pairs = ()
        if body.mode == PRACTICE:
            if not 1 <= body.relevant_count <= domain.n:
                raise ApiError(400, "validation-error",
                               f"relevant_count must be in [1, {domain.n}]")
            gt = sample_reward(domain, body.relevant_count, body.seed)
            eval_pairs = _eval_contexts(gt, domain, 200, body.seed)
        session = Session(
            id=uuid.uuid4().hex,
            domain=domain,
            condition=condition,
            mode=body.mode,
            seed=body.seed,
            train_config=train_config,
            gt=gt,
            sampler=ContextSampler(context_size=2, rng_seed=body.seed),
            model=init_model(domain, train_config),
            eval_pairs=eval_pairs,
        )
        with registry_lock:
            sessions[session.id] = session
        out = {"id": session.id, "condition": condition.value, "mode": body.mode,
               "domain": body.domain, "answer_kinds": _answer_kinds(condition)}
        if gt is not None:
            out["gt_theta"] = [float(t) for t in gt.theta]
        return out

    @app.get("/sessions/{sid}/query")
    def next_query(sid: str):
        session = get_session(sid)
        with session.lock:
            if session.current_query is None:
                ctx = sample_context(session.domain, session.sampler)
                session.query_counter += 1
                space = session.domain.feature_space
                session.current_query = {
                    "query_id": f"q{session.query_counter}",
                    "features": list(space.names),
                    "options": {
                        "a": {f.name: f.value_name(v) for f, v
                              in zip(space.features, ctx.actions[0])},
                        "b": {f.name: f.value_name(v) for f, v
                              in zip(space.features, ctx.actions[1])},
                    },
                    "option_values": {
                        "a": [float(v) for v in ctx.actions[0]],
                        "b": [float(v) for v in ctx.actions[1]],
                    },
                    "answer_kinds": _answer_kinds(session.condition),
                }
            return session.current_query

    @app.post("/sessions/{sid}/response")
    def submit_response(sid: str, body: ResponseBody):
        session = get_session(sid)
        with session.lock:
            if session.current_query is None:
                raise ApiError(409, "no-outstanding-query",
                               "fetch a query before responding")
            if body.query_id != session.current_query["query_id"]:
                raise ApiError(409, "stale-query",
                               f"outstanding query is "
                               f"{session.current_query['query_id']!r}, "
                               f"got {body.query_id!r}")
            record = _build_record(session, body)
            raw = [r for r in session.records if not r.synthesized]
            raw.append(record)
            dataset = PreferenceDataset(tuple(raw),
                                        session.domain.feature_space)
            if session.condition in (Condition.PRAG_RLHF, Condition.PRAG_FP):
                dataset = augment(dataset)
            session.records = list(dataset.records)
            session.responses.append(body.model_dump())
            session.history.append(body.query_id)
            session.current_query = None
            _retrain(session)
            return _snapshot(session)

    @app.get("/sessions/{sid}/model")
    def model_snapshot(sid: str):
        session = get_session(sid)
        with session.lock:
            return _snapshot(session)

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str):
        session = get_session(sid)
        with session.lock:
            out = {
                "session": {
                    "domain": session.domain.label,
                    "condition": session.condition.value,
                    "mode": session.mode,
                    "seed": session.seed,
                    "created_at": session.created_at,
                    "updated_at": session.updated_at,
                },
                "dataset_jsonl": dataset_to_jsonl(_current_dataset(session)),
                "checkpoint": save_checkpoint(session.model,
                                              session.train_config),
                "responses": list(session.responses),
            }
            if session.gt is not None:
                out["session"]["gt_theta"] = [float(t) for t in session.gt.theta]
            return out

    return app


def serve(port: int = 8080, host: str = "127.0.0.1") -> None:
    """Run the elicitation service (blocking)."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port, log_level="info")
