"""Operator entry point: ingest, rollout, extract, eval.

Runs are driven by a JSON config file plus flag overrides; credentials come
from the environment only. Every command is deterministic given (config,
seed, scripted backends). Exit codes: 0 success, 2 configuration error,
3 data error, 4 transport error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import click

from .artifacts import artifact_path, read_rollout_dir, write_rollout_artifact
from .backends.agent import ActionTextAgent, FunctionCallingAgent
from .backends.base import SamplingParams, TransportError
from .backends.client import ChatCompletionsClient
from .backends.prompts import agent_system_prompt
from .backends.scripted import GoalListUser, NoisyAgent, NthVariantOracleAgent
from .backends.user import GoalUserSimulator, GuideUserSimulator
from .env import ApiRegistry, ScenarioLoadError, default_registry, read_scenario_file
from .extraction import extract_kto, extract_sft, filter_rollouts
from .ingest import ingest_source
from .metrics import conversation_result, evaluate_run, stability_curve
from .rollout import BeamConfig, run_rollout
from .stats import paired_bootstrap

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRANSPORT = 4

TABLE_ONE_COUNTS = {"train": 6251, "val": 793, "test": 805, "official_test": 450}


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _log(event: str, **fields: Any) -> None:
    click.echo(json.dumps({"event": event, **fields}, sort_keys=True), err=True)


@dataclass
class RunConfig:
    scenario_file: str = ""  # a scenario file, or a directory holding <split>.jsonl
    split: str = ""  # train | val | test | official_test (when scenario_file is a directory)
    out_dir: str = "rollouts"
    branching_factor: int = 2
    max_beam: int = 8
    max_depth: int = 10
    seed: int = 0
    parallelism: int = 1
    backend: str = "scripted"  # scripted | live
    scripted_flavor: str = "noisy"  # noisy | branchy (scripted backend only)
    agent_style: str = "action"  # action | fc
    user_style: str = "goal"  # goal | guide
    endpoint: str = ""
    agent_model: str = ""
    user_model: str = ""
    api_key_env: str = "TURNBEAM_API_KEY"
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e.msg}") from None
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**raw)

    def validate(self) -> None:
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.backend not in ("scripted", "live"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.agent_style not in ("action", "fc"):
            raise ConfigError(f"unknown agent_style {self.agent_style!r}")
        if self.user_style not in ("goal", "guide"):
            raise ConfigError(f"unknown user_style {self.user_style!r}")
        if self.backend == "live" and not self.endpoint:
            raise ConfigError("live backend requires an endpoint")
        if not self.scenario_file:
            raise ConfigError("scenario_file is required")
        if not Path(self.scenario_file).exists():
            raise ConfigError(f"scenario_file does not exist: {self.scenario_file}")
        if Path(self.scenario_file).is_dir() and not self.split:
            raise ConfigError("scenario_file is a directory; choose one with --split")
        if self.split and self.split not in ("train", "val", "test", "official_test"):
            raise ConfigError(f"unknown split {self.split!r}")

    def beam_config(self) -> BeamConfig:
        return BeamConfig(
            branching_factor=self.branching_factor,
            max_beam=self.max_beam,
            max_depth=self.max_depth,
            agent_sampling=SamplingParams(
                temperature=self.temperature, top_k=self.top_k, top_p=self.top_p
            ),
        )

    def backend_descriptor(self) -> dict[str, Any]:
        if self.backend == "scripted":
            return {"backend": "scripted", "flavor": self.scripted_flavor, "seed": self.seed}
        return {
            "backend": "live",
            "endpoint": self.endpoint,
            "agent_model": self.agent_model,
            "user_model": self.user_model,
            "agent_style": self.agent_style,
            "user_style": self.user_style,
        }


class ConfigError(ValueError):
    pass


def _resolve_scenarios(config: RunConfig, registry: ApiRegistry):
    """Scenario environments for the configured file (or directory + split)."""
    base = Path(config.scenario_file)
    if not base.is_dir():
        return read_scenario_file(base, registry)
    split_file = base / ("test.jsonl" if config.split == "official_test" else f"{config.split}.jsonl")
    envs = read_scenario_file(split_file, registry)
    if config.split == "official_test":
        manifest_path = base / "manifests.json"
        if manifest_path.exists():
            ids = set(json.loads(manifest_path.read_text())["official_test"]["scenario_ids"])
            envs = [e for e in envs if e.scenario_id in ids]
        else:
            envs = envs[:450]
    return envs


def _backend_factory(config: RunConfig, registry: ApiRegistry):
    """Per-scenario (agent, user) builder; live clients are shared."""
    if config.backend == "scripted":
        def scripted(env):
            if config.scripted_flavor == "branchy":
                return NthVariantOracleAgent(env, registry, n=1), GoalListUser()
            return NoisyAgent(env, registry, seed=config.seed), GoalListUser()

        return scripted

    api_key = os.environ.get(config.api_key_env)
    agent_client = ChatCompletionsClient(config.endpoint, config.agent_model, api_key=api_key)
    user_client = ChatCompletionsClient(config.endpoint, config.user_model, api_key=api_key)
    if config.agent_style == "fc":
        agent = FunctionCallingAgent(agent_client, registry)
    else:
        agent = ActionTextAgent(agent_client, registry)
    if config.user_style == "guide":
        user = GuideUserSimulator(user_client)
    else:
        user = GoalUserSimulator(user_client)
    return lambda env: (agent, user)


@click.group()
def main() -> None:
    """Simulation, dataset extraction and evaluation for tool-calling agents."""


@main.command("ingest")
@click.argument("source_dir")
@click.argument("out_dir")
@click.option("--check-expected-counts", is_flag=True, help="Warn when split sizes deviate from the reference corpus sizes.")
def cmd_ingest(source_dir: str, out_dir: str, check_expected_counts: bool) -> None:
    """Convert a source corpus into scenario files and split manifests."""
    registry = default_registry()
    expected = TABLE_ONE_COUNTS if check_expected_counts else None
    try:
        summary = ingest_source(source_dir, out_dir, registry, expected_counts=expected)
    except FileNotFoundError as e:
        _fail(EXIT_DATA, str(e))
    click.echo("split            scenarios")
    for split in ("train", "val", "test", "official_test"):
        click.echo(f"{split:<16} {summary.counts.get(split, 0)}")
    click.echo(f"{'total':<16} {summary.total}")
    click.echo(f"{'single-domain':<16} {summary.single_domain}")
    click.echo(f"{'multi-domain':<16} {summary.multi_domain}")
    if summary.skipped:
        click.echo(f"skipped {len(summary.skipped)} dialogues:", err=True)
        for line in summary.skipped:
            click.echo(f"  {line}", err=True)


@main.command("rollout")
@click.option("--config", "config_path", default=None, help="JSON run config.")
@click.option("--scenarios", "scenario_file", default=None,
              help="Scenario file, or an ingest output directory (overrides config).")
@click.option("--split", default=None,
              help="train|val|test|official_test when --scenarios is a directory.")
@click.option("--out", "out_dir", default=None, help="Artifact directory (overrides config).")
@click.option("--backend", type=click.Choice(["scripted", "live"]), default=None)
@click.option("--scripted-flavor", type=click.Choice(["noisy", "branchy"]), default=None)
@click.option("--branching-factor", type=int, default=None)
@click.option("--max-beam", type=int, default=None)
@click.option("--max-depth", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--limit", type=int, default=None, help="Only the first N scenarios.")
def cmd_rollout(config_path, scenario_file, split, out_dir, backend, scripted_flavor,
                branching_factor, max_beam, max_depth, seed, parallelism, limit) -> None:
    """Run beam-search rollouts over a scenario file; resumable."""
    try:
        config = RunConfig.from_file(config_path) if config_path else RunConfig()
        overrides = {
            "scenario_file": scenario_file,
            "split": split,
            "out_dir": out_dir,
            "backend": backend,
            "scripted_flavor": scripted_flavor,
            "branching_factor": branching_factor,
            "max_beam": max_beam,
            "max_depth": max_depth,
            "seed": seed,
            "parallelism": parallelism,
        }
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        config.validate()
        beam = config.beam_config()
    except (ConfigError, ValueError) as e:
        _fail(EXIT_CONFIG, str(e))

    registry = default_registry()
    try:
        envs = _resolve_scenarios(config, registry)
    except (ScenarioLoadError, OSError) as e:
        _fail(EXIT_DATA, str(e))
    if limit is not None:
        envs = envs[:limit]

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    backends_for = _backend_factory(config, registry)

    def run_one(env) -> tuple[str, dict[str, int]]:
        path = artifact_path(out, env.scenario_id)
        if path.exists():
            _log("skipped", scenario_id=env.scenario_id, reason="artifact exists")
            return "skipped", {"prompt_tokens": 0, "completion_tokens": 0}
        agent, user = backends_for(env)
        tree = run_rollout(env, agent, user, beam)
        write_rollout_artifact(
            out, tree, beam.to_dict(), config.seed, config.backend_descriptor()
        )
        _log(
            "rollout_done",
            scenario_id=env.scenario_id,
            terminated=tree.terminated_reason.value,
            average_reward=str(tree.ledger.average_reward),
            nodes=len(tree.nodes),
            usage=tree.usage,
        )
        status = "fault" if tree.terminated_reason.value == "Fault" else "done"
        return status, tree.usage

    try:
        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                outcomes = list(pool.map(run_one, envs))
        else:
            outcomes = [run_one(env) for env in envs]
    except TransportError as e:
        # Branch-level faults are absorbed into Fault artifacts; anything
        # reaching here means the transport layer itself is unusable.
        _fail(EXIT_TRANSPORT, str(e))

    statuses = [s for s, _ in outcomes]
    done = statuses.count("done")
    faulted = statuses.count("fault")
    skipped = statuses.count("skipped")
    prompt_tokens = sum(u["prompt_tokens"] for _, u in outcomes)
    completion_tokens = sum(u["completion_tokens"] for _, u in outcomes)
    _log(
        "run_complete",
        done=done,
        faulted=faulted,
        skipped=skipped,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )
    click.echo(f"rollouts: {done} done, {faulted} faulted, {skipped} skipped (resume)")
    click.echo(f"tokens: {prompt_tokens} prompt, {completion_tokens} completion")


@main.command("extract")
@click.argument("rollout_dir")
@click.option("--format", "fmt", type=click.Choice(["sft", "kto"]), required=True)
@click.option("--out", "out_path", required=True)
@click.option("--no-filter", is_flag=True, help="Keep rollouts that failed the full-success filter too.")
def cmd_extract(rollout_dir: str, fmt: str, out_path: str, no_filter: bool) -> None:
    """Extract a training dataset from rollout artifacts."""
    try:
        items = read_rollout_dir(rollout_dir)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        _fail(EXIT_DATA, f"cannot read rollout artifacts: {e}")
    if not items:
        _fail(EXIT_DATA, f"no rollout artifacts in {rollout_dir}")

    trees = [tree for tree, _ in items]
    kept = trees if no_filter else filter_rollouts(trees)

    # Training transcripts open with the full agent system prompt, API
    # definitions included, so the tuned model sees its deployment context.
    system_prompt = agent_system_prompt(default_registry())
    lines: list[str] = []
    records = 0
    for tree in kept:  # read_rollout_dir orders by scenario id
        if fmt == "sft":
            record = extract_sft(tree, system_prompt=system_prompt)
            if record is not None:
                lines.append(json.dumps(record.to_dict(), sort_keys=True))
                records += 1
        else:
            for record in extract_kto(tree, system_prompt=system_prompt):
                lines.append(json.dumps(record.to_dict(), sort_keys=True))
                records += 1

    out_file = Path(out_path)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    out_file.write_text("".join(line + "\n" for line in lines))
    click.echo(
        f"kept {len(kept)}/{len(trees)} rollouts; wrote {records} {fmt} records to {out_path}"
    )


def _results_from_dir(path: str):
    items = read_rollout_dir(path)
    if not items:
        _fail(EXIT_DATA, f"no rollout artifacts in {path}")
    return {tree.scenario_id: conversation_result(tree) for tree, _ in items}


@main.command("eval")
@click.argument("results_dir")
@click.option("--compare", "compare_dir", default=None, help="Second artifact dir; prints the paired-bootstrap p-value.")
@click.option("--stability", "stability_dirs", multiple=True, help="Two or more artifact dirs for the stability curve.")
@click.option("--report", "report_path", default=None, help="Write the full JSON report here.")
@click.option("--curve-out", "curve_path", default=None, help="Write the stability curve table (TSV) here.")
@click.option("--resamples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_eval(results_dir, compare_dir, stability_dirs, report_path, curve_path, resamples, seed) -> None:
    """Aggregate rewards, success rate, and error rates over rollout artifacts."""
    try:
        results = _results_from_dir(results_dir)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as e:
        _fail(EXIT_DATA, f"cannot read results: {e}")

    rows = [results[sid] for sid in sorted(results)]
    report = evaluate_run(rows)
    agg = report.to_dict()["aggregate"]
    click.echo(f"conversations        {agg['conversations']}")
    click.echo(f"avg reward           {agg['avg_reward_mean_float']:.4f}")
    click.echo(f"100% success rate    {agg['success_rate_100_float']:.4f}")
    for cat, rate in agg["error_rate_by_category"].items():
        click.echo(f"error rate {cat:<20} {rate:.4f}")

    if report_path:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    if compare_dir:
        try:
            other = _results_from_dir(compare_dir)
        except (FileNotFoundError, json.JSONDecodeError, KeyError) as e:
            _fail(EXIT_DATA, f"cannot read comparison results: {e}")
        shared = sorted(set(results) & set(other))
        if not shared:
            _fail(EXIT_DATA, "no shared scenarios between the two result dirs")
        a = [float(results[sid].average_reward) for sid in shared]
        b = [float(other[sid].average_reward) for sid in shared]
        p = paired_bootstrap(a, b, resamples=resamples, seed=seed)
        click.echo(f"paired bootstrap over {len(shared)} shared conversations: p = {p:.6f}")

    if stability_dirs:
        if len(stability_dirs) < 2:
            _fail(EXIT_CONFIG, "--stability needs at least two result dirs")
        runs_results = [_results_from_dir(d) for d in stability_dirs]
        shared = sorted(set.intersection(*(set(r) for r in runs_results)))
        if not shared:
            _fail(EXIT_DATA, "no shared scenarios across stability runs")
        runs = [[float(r[sid].average_reward) for sid in shared] for r in runs_results]
        curve = stability_curve(runs)
        out_lines = ["conversations\tstd_dev\tsmoothed"]
        for row in curve.to_rows():
            out_lines.append(f"{row['conversations']}\t{row['std_dev']:.8f}\t{row['smoothed']:.8f}")
        table = "\n".join(out_lines) + "\n"
        if curve_path:
            Path(curve_path).write_text(table)
            click.echo(f"stability curve over {len(shared)} conversations written to {curve_path}")
        else:
            click.echo(table, nl=False)


if __name__ == "__main__":
    main()
