"""Command-line front end.

Four subcommands: ``regret`` (batch simulation, CSV + SVG curves),
``offline-eval`` (logged-data generation plus inverse propensity
weighting, CSV + histogram SVG), ``diagnose`` (bound evaluators next to
an empirical run), and ``validate`` (schema check and instance summary,
no execution).  Every command is a pure function of (config, seed) to
output bytes.  CSV files open with a ``#schema=1`` line; floats are
written with 17 significant digits so reruns are byte-identical and
importance weights survive the round trip exactly.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from functools import partial
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import BoundConfig, asymptotic_constant, finite_time_bound, worst_case_rate
from .envs import instance_summary
from .ope import aggregate_ipw, ipw_general
from .policies import PolicyConfig
from .simulate import default_checkpoints, map_trials, run_batch, write_log
from .svgplot import Series, histogram, line_plot

__all__ = ["main", "cmd_regret", "cmd_offline_eval", "cmd_diagnose", "cmd_validate"]

log = logging.getLogger("klms")

SCHEMA_LINE = "#schema=1"


def _g(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [SCHEMA_LINE, ",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _target_vector(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.ope.target == "uniform":
        k = cfg.instance.n_arms
        return np.full(k, 1.0 / k)
    return np.array(cfg.ope.target)


def _ope_policy_variants(cfg: ExperimentConfig) -> list[tuple[str, int, PolicyConfig]]:
    """(csv label, M column, policy) per run; the Monte-Carlo grid fans
    out Thompson sampling, everything else logs exact probabilities."""
    variants = []
    for policy in cfg.policies:
        if policy.kind == "bernoulli_ts":
            for m in cfg.ope.mc_grid:
                variants.append((policy.kind, m, dataclasses.replace(policy, mc_samples=m)))
        else:
            variants.append((policy.kind, 0, policy))
    return variants


def _ipw_reducer(trial_log, curve, index, target=None, log_dir=None, label=""):
    if log_dir is not None:
        write_log(trial_log, Path(log_dir) / f"{label}_trial{index:05d}.log")
    return ipw_general(trial_log, target)


def cmd_regret(cfg: ExperimentConfig, out: Path, jobs: int, keep_logs: bool) -> list[Path]:
    """Mean pseudo-regret curves with standard errors for every policy."""
    out.mkdir(parents=True, exist_ok=True)
    instance = cfg.run_instance
    checkpoints = (
        np.array(cfg.checkpoints, dtype=np.int64)
        if cfg.checkpoints is not None
        else default_checkpoints(cfg.horizon)
    )
    rows = []
    series = []
    for policy in cfg.policies:
        log.info(
            "regret: %s, %d trials, horizon %d", policy.label, cfg.n_trials, cfg.horizon
        )
        batch = run_batch(
            policy,
            instance,
            cfg.horizon,
            cfg.n_trials,
            cfg.base_seed,
            jobs=jobs,
            checkpoints=checkpoints,
            keep_logs=keep_logs,
            log_probs=keep_logs,
        )
        for t, mean, err in zip(batch.times, batch.mean_gap_regret, batch.stderr_gap_regret):
            rows.append([policy.label, str(int(t)), _g(mean), _g(err), str(cfg.n_trials)])
        series.append(
            Series(
                label=policy.label,
                xs=batch.times.tolist(),
                ys=batch.mean_gap_regret.tolist(),
                band_lo=(batch.mean_gap_regret - batch.stderr_gap_regret).tolist(),
                band_hi=(batch.mean_gap_regret + batch.stderr_gap_regret).tolist(),
            )
        )
        if keep_logs and batch.logs is not None:
            log_dir = out / "logs"
            log_dir.mkdir(exist_ok=True)
            for i, trial_log in enumerate(batch.logs):
                write_log(trial_log, log_dir / f"{policy.label}_trial{i:05d}.log")
    if instance.n_arms >= 2:
        ts = [int(t) for t in checkpoints if t >= 2]
        series.append(
            Series(
                label="worst-case rate shape (unscaled)",
                xs=ts,
                ys=[worst_case_rate(instance, t) for t in ts],
                dashed=True,
            )
        )
    csv_path = out / "regret.csv"
    _write_csv(csv_path, ["policy", "t", "mean_regret", "stderr", "n_trials"], rows)
    svg_path = out / "regret.svg"
    svg_path.write_text(
        line_plot(
            "Mean pseudo-regret (band: one standard error)",
            "t",
            "cumulative pseudo-regret",
            series,
            log_x=True,
        )
    )
    return [csv_path, svg_path]


def cmd_offline_eval(cfg: ExperimentConfig, out: Path, jobs: int, keep_logs: bool) -> list[Path]:
    """Generate logs per policy, weight them against the target policy,
    and report MSE/bias plus the invalid-trial count."""
    if not cfg.ope.enabled:
        raise ConfigError("ope.enabled: offline-eval needs this set to true")
    out.mkdir(parents=True, exist_ok=True)
    instance = cfg.run_instance
    target = _target_vector(cfg)
    truth = float(np.dot(target, np.array(instance.means)))
    log_dir = None
    if keep_logs:
        log_dir = out / "logs"
        log_dir.mkdir(exist_ok=True)

    rows = []
    hist_sets = []
    for label, m_col, policy in _ope_policy_variants(cfg):
        pretty = label if m_col == 0 else f"{label} (M={m_col})"
        log.info(
            "offline-eval: %s, %d trials, horizon %d", pretty, cfg.n_trials, cfg.horizon
        )
        reducer = partial(
            _ipw_reducer,
            target=target,
            log_dir=str(log_dir) if log_dir else None,
            label=pretty.replace(" ", "").replace("(", "_").replace(")", ""),
        )
        reports = map_trials(
            policy,
            instance,
            cfg.horizon,
            cfg.n_trials,
            cfg.base_seed,
            jobs=jobs,
            reducer=reducer,
        )
        n_invalid = sum(1 for r in reports if not r.valid)
        if n_invalid == len(reports):
            # every trial hit a zero behavior probability; there is no
            # estimate to aggregate, only the invalid count to report
            mse_s, bias_s = "nan", "nan"
            log.warning("offline-eval: %s -> all %d trials invalid", pretty, n_invalid)
        else:
            agg = aggregate_ipw(reports, truth)
            mse_s, bias_s = _g(agg.mse), _g(agg.bias)
            hist_sets.append((pretty, [r.estimate for r in reports if r.valid]))
            log.info(
                "offline-eval: %s -> mse %.6g, bias %.6g, invalid %d/%d",
                pretty,
                agg.mse,
                agg.bias,
                agg.n_invalid,
                agg.n_trials,
            )
        rows.append(
            [
                label,
                str(m_col),
                str(cfg.horizon),
                str(cfg.n_trials),
                str(n_invalid),
                mse_s,
                bias_s,
            ]
        )

    csv_path = out / "ope.csv"
    _write_csv(
        csv_path, ["policy", "M", "T", "n_trials", "n_invalid", "mse", "bias"], rows
    )
    written = [csv_path]
    if hist_sets:
        svg_path = out / "ope_hist.svg"
        svg_path.write_text(
            histogram(
                "Offline estimates of the target policy value (valid trials)",
                "estimate",
                "trials",
                hist_sets,
                truth=truth,
            )
        )
        written.append(svg_path)
    return written


def cmd_diagnose(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    """Bound evaluators against an accompanying empirical run."""
    if not (cfg.instance.is_bernoulli or cfg.binarize):
        raise ConfigError(
            "instance: diagnose needs Bernoulli rewards (bernoulli arms or binarize=true)"
        )
    if cfg.instance.n_arms < 2:
        raise ConfigError("instance.arms: diagnose needs at least two arms")
    out.mkdir(parents=True, exist_ok=True)
    instance = cfg.run_instance
    d = cfg.diagnose
    bound_cfg = BoundConfig(delta=d.delta, c=d.c)
    constant = asymptotic_constant(cfg.instance)
    horizon = max(d.t_grid)
    checkpoints = np.unique(
        np.concatenate([default_checkpoints(horizon), np.array(d.t_grid, dtype=np.int64)])
    )
    log.info(
        "diagnose: klms companion run, %d trials, horizon %d", d.n_trials, horizon
    )
    batch = run_batch(
        PolicyConfig(kind="klms"),
        instance,
        horizon,
        d.n_trials,
        cfg.base_seed,
        jobs=jobs,
        checkpoints=checkpoints,
    )
    mean_at = dict(zip(batch.times.tolist(), batch.mean_gap_regret.tolist()))
    rows = []
    for t in d.t_grid:
        mean_regret = mean_at[t]
        rows.append(
            [
                str(t),
                _g(mean_regret),
                _g(mean_regret / math.log(t)),
                _g(finite_time_bound(cfg.instance, t, bound_cfg)),
                _g(worst_case_rate(cfg.instance, t)),
                _g(constant),
            ]
        )
    csv_path = out / "diagnostics.csv"
    _write_csv(
        csv_path,
        [
            "t",
            "mean_regret",
            "regret_over_log_t",
            "finite_time_bound",
            "worst_case_rate",
            "asymptotic_constant",
        ],
        rows,
    )
    return [csv_path]


def cmd_validate(cfg: ExperimentConfig, stream=None) -> int:
    """Print the derived instance summary without running anything."""
    stream = stream or sys.stdout
    s = instance_summary(cfg.instance)
    print(f"arms: {cfg.instance.n_arms}", file=stream)
    for i, arm in enumerate(cfg.instance.arms):
        print(f"  arm {i}: {arm.kind}, mean {arm.mean:.6g}", file=stream)
    print(f"best mean: {s.best_mean:.6g}", file=stream)
    print(f"gaps: {tuple(round(g, 12) for g in s.gaps)}", file=stream)
    print(f"mean of means (uniform-policy value): {s.mean_of_means:.6g}", file=stream)
    print(f"binarize: {cfg.binarize}", file=stream)
    print(f"policies: {', '.join(p.label for p in cfg.policies)}", file=stream)
    print(
        f"run: horizon {cfg.horizon}, trials {cfg.n_trials}, base seed {cfg.base_seed}",
        file=stream,
    )
    if cfg.ope.enabled:
        print(
            f"ope: target {cfg.ope.target}, mc grid {list(cfg.ope.mc_grid)}", file=stream
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klms",
        description="Bounded-reward bandit lab: regret simulation and offline evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_out in (
        ("regret", True),
        ("offline-eval", True),
        ("diagnose", True),
        ("validate", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="experiment config file")
        if needs_out:
            p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
            p.add_argument(
                "--jobs",
                type=int,
                default=os.cpu_count() or 1,
                help="worker processes (results are identical for any value)",
            )
        p.add_argument("--seed", type=int, default=None, help="override run.base_seed")
        p.add_argument(
            "--mc-smoothing",
            action="store_true",
            help="smooth Thompson Monte-Carlo probabilities as (count+1)/(M+K)",
        )
        if needs_out:
            p.add_argument(
                "--keep-logs",
                action="store_true",
                help="persist per-trial interaction logs under OUT/logs/",
            )
    return parser


def _apply_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=args.seed)
    if args.mc_smoothing:
        cfg = dataclasses.replace(
            cfg,
            policies=tuple(
                dataclasses.replace(p, mc_smoothing=True) if p.kind == "bernoulli_ts" else p
                for p in cfg.policies
            ),
        )
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("KLMS_LOG_LEVEL", "INFO").upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "regret":
            written = cmd_regret(cfg, args.out, args.jobs, args.keep_logs)
        elif args.command == "offline-eval":
            written = cmd_offline_eval(cfg, args.out, args.jobs, args.keep_logs)
        else:
            written = cmd_diagnose(cfg, args.out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
