"""Experiment execution: seeded replications, aggregation, CSV output.

Every replication derives all of its randomness from (master_seed,
replication index, stream role), so results are reproducible bit for bit,
runs of different policies inside one replication share the same
environment rounds, and adding a policy to the roster never changes the
rounds the existing policies see. Replications can execute in parallel;
aggregation always folds them in replication order, so the output files
are byte-identical regardless of the worker count.
"""

from __future__ import annotations

import csv
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from .config import ExperimentConfig, output_labels
from .env import BanditEnvironment, EnvironmentConfig
from .errors import ConfigError
from .offpolicy import (
    LoggedInteraction,
    ModelArgmaxPolicy,
    export_logged_feedback,
    fit_ipw,
    fit_propensity,
    logged_propensity_estimates,
)
from .policies import make_policy
from .sim import SimulationLog, cumulative_regret, rolling_mean, simulate

__all__ = [
    "derive_seed",
    "run_replication",
    "run_experiment",
    "ExperimentResult",
    "SeriesAggregate",
    "write_logged_feedback_csv",
    "read_logged_feedback_csv",
    "ROUND_METRICS",
]

ROUND_METRICS = ("rolling_reward", "rolling_expected_reward", "cumulative_regret")

SCALAR_METRICS = (
    "final_cumulative_reward",
    "final_cumulative_regret",
    "mean_expected_reward",
    "cumulative_expected_reward",
    "eval_mean_expected_reward",
    "policy_value",
)

Z_95 = 1.96  # normal-approximation 95% confidence band


def derive_seed(master_seed: int, replication: int, role: str) -> int:
    """Pure seed derivation from (master seed, replication, stream role)."""
    entropy = [master_seed % 2**64, replication, zlib.crc32(role.encode("utf-8"))]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class _RunRecord:
    """Per-replication output of one policy run."""

    offset: int
    series: dict[str, np.ndarray]
    scalars: dict[str, float]


def _summarize(log: SimulationLog, window: int, offset: int = 0) -> _RunRecord:
    regret = cumulative_regret(log)
    series = {
        "rolling_reward": rolling_mean(log.rewards, window),
        "rolling_expected_reward": rolling_mean(log.chosen_expected_reward, window),
        "cumulative_regret": regret,
    }
    scalars = {
        "final_cumulative_reward": float(log.rewards.sum()),
        "final_cumulative_regret": float(regret[-1]),
        "mean_expected_reward": float(log.chosen_expected_reward.mean()),
        "cumulative_expected_reward": float(log.chosen_expected_reward.sum()),
    }
    return _RunRecord(offset=offset, series=series, scalars=scalars)


def run_replication(
    config: ExperimentConfig, rep: int
) -> tuple[dict[str, _RunRecord], list[LoggedInteraction] | None]:
    """Run one seeded replication of every configured policy.

    Returns the per-label records plus, for onoff experiments, the logging
    policy's training-period feedback (used by the caller to export CSV for
    replication 0).
    """
    ms = config.master_seed
    env_settings = config.environment
    env_seed = derive_seed(ms, rep, "env")
    drift = None
    if config.drifter is not None:
        drift = replace(config.drifter, seed=derive_seed(ms, rep, "drift"))

    records: dict[str, _RunRecord] = {}
    logging_log: SimulationLog | None = None
    shared_rounds = None

    for variant in config.delay_variants:
        env = BanditEnvironment(
            EnvironmentConfig(
                n_actions=env_settings.n_actions,
                dim_context=env_settings.dim_context,
                seed=env_seed,
                coefficient_scale=env_settings.coefficient_scale,
                drift=drift,
                delay=variant.delay,
            )
        )
        rounds = env.sample_rounds(config.horizon)
        if shared_rounds is None:
            shared_rounds = rounds
        suffix = f"_{variant.label}" if variant.label else ""
        for spec in config.policies:
            label = spec.label + suffix
            policy = make_policy(
                spec.name, env_settings.n_actions, env_settings.dim_context, spec.params
            )
            rng = np.random.default_rng(derive_seed(ms, rep, f"policy:{label}"))
            log = simulate(policy, rounds, rng)
            records[label] = _summarize(log, config.rolling_window)
            if config.onoff is not None:
                train = config.onoff.train_rounds
                records[label].scalars["eval_mean_expected_reward"] = float(
                    log.chosen_expected_reward[train:].mean()
                )
                if spec.label == config.onoff.logging_policy:
                    logging_log = log

    if config.control_policies:
        control_env = BanditEnvironment(
            EnvironmentConfig(
                n_actions=env_settings.n_actions,
                dim_context=env_settings.dim_context,
                seed=env_seed,
                coefficient_scale=env_settings.coefficient_scale,
            )
        )
        control_rounds = control_env.sample_rounds(config.horizon)
        for spec in config.control_policies:
            label = f"{spec.label}_stationary"
            policy = make_policy(
                spec.name, env_settings.n_actions, env_settings.dim_context, spec.params
            )
            rng = np.random.default_rng(derive_seed(ms, rep, f"policy:{label}"))
            records[label] = _summarize(
                simulate(policy, control_rounds, rng), config.rolling_window
            )

    feedback: list[LoggedInteraction] | None = None
    if config.onoff is not None:
        assert logging_log is not None and shared_rounds is not None
        train = config.onoff.train_rounds
        feedback = export_logged_feedback(logging_log)[:train]
        ipw_config = replace(config.ipw, seed=derive_seed(ms, rep, "ipw"))
        if ipw_config.use_true_propensities:
            propensities = np.array([row.logged_propensity for row in feedback])
        else:
            prop_model = fit_propensity(feedback, env_settings.n_actions, ipw_config)
            propensities = logged_propensity_estimates(
                prop_model, feedback, ipw_config.propensity_floor
            )
        ipw_model = fit_ipw(feedback, propensities, env_settings.n_actions, ipw_config)
        eval_rounds = shared_rounds[train:]
        ipw_rng = np.random.default_rng(derive_seed(ms, rep, "policy:ipw"))
        ipw_log = simulate(ModelArgmaxPolicy(ipw_model), eval_rounds, ipw_rng)
        record = _summarize(ipw_log, config.rolling_window, offset=train)
        value = float(ipw_log.chosen_expected_reward.mean())
        record.scalars["eval_mean_expected_reward"] = value
        record.scalars["policy_value"] = value
        records["ipw"] = record

    return records, feedback


@dataclass
class SeriesAggregate:
    """Mean and 95% confidence band of one per-round metric across replications."""

    offset: int
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    labels: list[str]
    series: dict[str, dict[str, SeriesAggregate]]
    scalars: dict[str, dict[str, np.ndarray]]
    output_dir: Path | None


def _confidence_band(
    total: np.ndarray, total_sq: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = total / n
    if n > 1:
        var = np.maximum(total_sq - total**2 / n, 0.0) / (n - 1)
        half = Z_95 * np.sqrt(var / n)
    else:
        half = np.zeros_like(mean)
    return mean, mean - half, mean + half


def _replication_task(args: tuple[ExperimentConfig, int]):
    config, rep = args
    return run_replication(config, rep)


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    log: Callable[[str], None] | None = None,
) -> ExperimentResult:
    """Run all replications, aggregate, and (if configured) write CSV files."""
    labels = output_labels(config)
    n_reps = config.replications
    say = log if log is not None else (lambda message: None)

    sums: dict[str, dict[str, np.ndarray]] = {}
    sq_sums: dict[str, dict[str, np.ndarray]] = {}
    offsets: dict[str, int] = {}
    scalar_values: dict[str, dict[str, list[float]]] = {}
    feedback_rows: list[LoggedInteraction] | None = None

    def fold(rep: int, outcome) -> None:
        nonlocal feedback_rows
        records, feedback = outcome
        if rep == 0 and feedback is not None:
            feedback_rows = feedback
        for label, record in records.items():
            offsets[label] = record.offset
            label_sums = sums.setdefault(label, {})
            label_sqs = sq_sums.setdefault(label, {})
            for metric, values in record.series.items():
                if metric not in label_sums:
                    label_sums[metric] = np.zeros_like(values)
                    label_sqs[metric] = np.zeros_like(values)
                label_sums[metric] += values
                label_sqs[metric] += values**2
            store = scalar_values.setdefault(label, {})
            for metric, value in record.scalars.items():
                store.setdefault(metric, []).append(value)
        say(f"replication {rep + 1}/{n_reps} done")

    if jobs > 1 and n_reps > 1:
        tasks = [(config, rep) for rep in range(n_reps)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rep, outcome in enumerate(pool.map(_replication_task, tasks)):
                fold(rep, outcome)
    else:
        for rep in range(n_reps):
            fold(rep, run_replication(config, rep))

    series: dict[str, dict[str, SeriesAggregate]] = {}
    for label in labels:
        series[label] = {}
        for metric in ROUND_METRICS:
            mean, lo, hi = _confidence_band(sums[label][metric], sq_sums[label][metric], n_reps)
            series[label][metric] = SeriesAggregate(offsets[label], mean, lo, hi)
    scalars = {
        label: {metric: np.array(values) for metric, values in metrics.items()}
        for label, metrics in scalar_values.items()
    }

    out_dir = Path(config.output_dir) if config.output_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_rounds_csv(out_dir / "rounds.csv", labels, series)
        _write_summary_csv(out_dir / "summary.csv", labels, scalars, n_reps)
        _write_replications_csv(out_dir / "replications.csv", labels, scalars)
        (out_dir / "resolved_config.yaml").write_text(
            yaml.safe_dump(config.raw, sort_keys=True), encoding="utf-8"
        )
        if feedback_rows is not None:
            write_logged_feedback_csv(out_dir / "logged_feedback.csv", feedback_rows)
        say(f"wrote {out_dir}/rounds.csv, summary.csv, replications.csv")

    return ExperimentResult(config, labels, series, scalars, out_dir)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rounds_csv(
    path: Path, labels: Sequence[str], series: dict[str, dict[str, SeriesAggregate]]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["round", "policy", "metric", "mean", "ci_low", "ci_high"])
        for label in labels:
            for metric in ROUND_METRICS:
                agg = series[label][metric]
                for i in range(len(agg.mean)):
                    writer.writerow(
                        [
                            agg.offset + i,
                            label,
                            metric,
                            _fmt(agg.mean[i]),
                            _fmt(agg.ci_low[i]),
                            _fmt(agg.ci_high[i]),
                        ]
                    )


def _write_summary_csv(
    path: Path, labels: Sequence[str], scalars: dict[str, dict[str, np.ndarray]], n_reps: int
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["policy", "metric", "mean", "ci_low", "ci_high"])
        for label in labels:
            for metric in SCALAR_METRICS:
                if metric not in scalars[label]:
                    continue
                values = scalars[label][metric]
                mean, lo, hi = _confidence_band(
                    np.array([values.sum()]), np.array([(values**2).sum()]), n_reps
                )
                writer.writerow([label, metric, _fmt(mean[0]), _fmt(lo[0]), _fmt(hi[0])])


def _write_replications_csv(
    path: Path, labels: Sequence[str], scalars: dict[str, dict[str, np.ndarray]]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["policy", "replication", "metric", "value"])
        for label in labels:
            for metric in SCALAR_METRICS:
                if metric not in scalars[label]:
                    continue
                for rep, value in enumerate(scalars[label][metric]):
                    writer.writerow([label, rep, metric, _fmt(value)])


def write_logged_feedback_csv(path: str | Path, rows: Sequence[LoggedInteraction]) -> None:
    """Write logged feedback as round,context_0..context_{d-1},action,reward,propensity."""
    if not rows:
        raise ConfigError("cannot write an empty logged-feedback file")
    dim = len(rows[0].context)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["round"] + [f"context_{i}" for i in range(dim)] + ["action", "reward", "propensity"]
        )
        for row in rows:
            writer.writerow(
                [row.round_index]
                + [_fmt(v) for v in row.context]
                + [row.action, row.reward, _fmt(row.logged_propensity)]
            )


def read_logged_feedback_csv(path: str | Path) -> list[LoggedInteraction]:
    """Read logged feedback written by :func:`write_logged_feedback_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or header[0] != "round" or header[-1] != "propensity":
            raise ConfigError(f"{path} is not a logged-feedback CSV")
        dim = len(header) - 4
        rows = []
        for record in reader:
            rows.append(
                LoggedInteraction(
                    round_index=int(record[0]),
                    context=np.array([float(v) for v in record[1 : 1 + dim]]),
                    action=int(record[1 + dim]),
                    reward=int(record[2 + dim]),
                    logged_propensity=float(record[3 + dim]),
                )
            )
    return rows
