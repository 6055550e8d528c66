"""Command-line interface.

Every flag of `experiment run` can also come from a TOML or JSON config file
(--config); explicit flags win over file values.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .augment import AugmentMode, augment
from .data import load_jsonl, save_jsonl
from .domains import DomainSpec, make_flight_domain, make_mushroom_domain
from .harness import ORACLE, ExperimentConfig, convert_triples_to_pairs, run_experiment
from .model import TrainConfig
from .oracle import Condition
from .parsing import KEYWORD, LM, Lexicon, LmClientConfig, parse_keywords


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib  # py >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text)


def _merge_config(ctx: click.Context, file_values: dict) -> None:
    """Fill in params the user did not pass explicitly from the config file.

    Config keys are the flag names ('eval-pairs'; underscores also accepted).
    """
    flag_to_param = {}
    for param in ctx.command.params:
        for opt in getattr(param, "opts", ()):
            if opt.startswith("--"):
                flag_to_param[opt[2:]] = param.name
    for name, value in file_values.items():
        key = flag_to_param.get(name.replace("_", "-"))
        if key is None or key == "config_path":
            raise click.UsageError(f"unknown config key {name!r}")
        if ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            ctx.params[key] = value


def _parse_budgets(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(b) for b in text)
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(b) for b in text.split(","))


def _parse_seeds(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    text = str(text)
    if "," in text:
        return tuple(int(s) for s in text.split(","))
    return tuple(range(int(text)))  # a bare count means seeds 0..count-1


def _domain_of(label: str) -> DomainSpec:
    return make_mushroom_domain() if label == "mushroom" else make_flight_domain()


@click.group()
@click.version_option(package_name="featpref")
def main():
    """Preference reward learning with pragmatic feature augmentation."""


@main.group()
def experiment():
    """Run simulated-oracle experiments."""


@experiment.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="TOML or JSON file mirroring these flags.")
@click.option("--domain", "domain_label",
              type=click.Choice(["mushroom", "flight"]), default="mushroom")
@click.option("--condition", "condition_name",
              type=click.Choice([c.value for c in Condition]), default="prag-fp")
@click.option("--relevant-count", type=int, default=1,
              help="Number of reward-relevant features in the sampled reward.")
@click.option("--budgets", default="1..20",
              help="Comparison budgets: '1..20', '1,5,10', or a single value.")
@click.option("--seeds", default="5",
              help="Seed count ('5' = seeds 0..4) or an explicit '0,1,2' list.")
@click.option("--eval-pairs", type=int, default=200)
@click.option("--beta", type=float, default=0.5)
@click.option("--learning-rate", type=float, default=0.002)
@click.option("--epochs", type=int, default=1500)
@click.option("--reward-seed", type=int, default=0,
              help="Seed for sampling the hidden reward function.")
@click.option("--mask-source", type=click.Choice([ORACLE, KEYWORD, LM]),
              default=None, help="Default: oracle for mushroom, keyword for flight.")
@click.option("--augment-mode", type=click.Choice([m.value for m in AugmentMode]),
              default="seen")
@click.option("--lm-endpoint", default=None,
              help="Language-model service URL (mask-source 'lm').")
@click.option("--out", "out_path", type=click.Path(), default="results.csv")
@click.pass_context
def experiment_run(ctx, config_path, domain_label, condition_name, relevant_count,
                   budgets, seeds, eval_pairs, beta, learning_rate, epochs,
                   reward_seed, mask_source, augment_mode, lm_endpoint, out_path):
    """Train and evaluate one condition across budgets and seeds; write CSV."""
    _merge_config(ctx, _load_config_file(config_path))
    p = ctx.params
    domain = _domain_of(p["domain_label"])
    mask_source = p["mask_source"] or (KEYWORD if p["domain_label"] == "flight"
                                       else ORACLE)
    lm_client = (LmClientConfig(endpoint=p["lm_endpoint"])
                 if p["lm_endpoint"] else None)
    config = ExperimentConfig(
        domain=domain,
        condition=Condition.parse(p["condition_name"]),
        relevant_count=p["relevant_count"],
        budgets=_parse_budgets(p["budgets"]),
        seeds=_parse_seeds(p["seeds"]),
        eval_pairs=p["eval_pairs"],
        train=TrainConfig(beta=p["beta"], learning_rate=p["learning_rate"],
                          epochs=p["epochs"]),
        augment_mode=AugmentMode.parse(p["augment_mode"]),
        mask_source=mask_source,
        reward_seed=p["reward_seed"],
        lm_client=lm_client,
    )
    result = run_experiment(config, p["out_path"])
    click.echo(f"wrote {p['out_path']} ({len(result.rows)} runs)")
    for agg in result.aggregates:
        click.echo(f"budget {agg.budget}: "
                   f"mean gt-best probability {agg.mean:.4f} "
                   f"(stderr {agg.stderr:.4f})")


@main.command("augment")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--mode", type=click.Choice([m.value for m in AugmentMode]),
              default="seen")
@click.option("--domain", "domain_label",
              type=click.Choice(["mushroom", "flight"]), default="mushroom")
@click.option("--domain-json", type=click.Path(exists=True), default=None,
              help="Custom domain spec JSON (overrides --domain).")
def augment_cmd(in_path, out_path, mode, domain_label, domain_json):
    """Expand a JSONL preference dataset with irrelevant-feature swaps."""
    if domain_json:
        domain = DomainSpec.from_json(Path(domain_json).read_text())
    else:
        domain = _domain_of(domain_label)
    dataset = load_jsonl(in_path, domain.feature_space)
    out = augment(dataset, AugmentMode.parse(mode))
    save_jsonl(out, out_path)
    click.echo(f"{len(dataset)} records in, {len(out)} out "
               f"({out.n_synthesized} synthesized)")


@main.command("parse")
@click.option("--domain", "domain_label",
              type=click.Choice(["mushroom", "flight"]), default="flight")
@click.option("--utterance", required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True),
              default=None)
def parse_cmd(domain_label, utterance, lexicon_path):
    """Print the relevance mask parsed from a preference description."""
    domain = _domain_of(domain_label)
    lexicon = Lexicon.load(lexicon_path) if lexicon_path else None
    result = parse_keywords(utterance, domain, lexicon)
    click.echo(json.dumps({
        "mask": [int(b) for b in result.mask],
        "relevant": [name for name, b
                     in zip(domain.feature_space.names, result.mask) if b],
    }))


@main.command("ingest-flights")
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--mask-source", type=click.Choice([ORACLE, KEYWORD, LM]),
              default=KEYWORD)
@click.option("--lm-endpoint", default=None)
def ingest_flights(in_path, out_path, mask_source, lm_endpoint):
    """Convert three-option flight choice rows into pairwise comparisons."""
    lm_client = LmClientConfig(endpoint=lm_endpoint) if lm_endpoint else None
    result = convert_triples_to_pairs(in_path, mask_source=mask_source,
                                      lm_client=lm_client)
    save_jsonl(result.dataset, out_path)
    click.echo(f"wrote {out_path}: {len(result.dataset)} records from "
               f"{result.groups} reward functions")
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)


@main.command("serve")
@click.option("--port", type=int, default=8080)
@click.option("--host", default="127.0.0.1")
def serve_cmd(port, host):
    """Start the live elicitation service."""
    from .service import serve

    serve(port=port, host=host)


if __name__ == "__main__":
    main(prog_name="featpref")
