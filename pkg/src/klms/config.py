"""Experiment configuration: TOML-syntax files with explicit keys.

A config names the instance, the policies to run, the horizon/trial
budget, and optional offline-evaluation and diagnostics sections.
Validation happens entirely at load time and errors carry the path of
the offending field.  Configs round-trip losslessly through
``to_dict``/``from_dict``.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from typing import Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .envs import BanditInstance, BernoulliArm, BetaArm, DiscreteArm, binarized
from .policies import PolicyConfig

__all__ = [
    "ConfigError",
    "OpeSettings",
    "DiagnoseSettings",
    "ExperimentConfig",
    "load_config",
]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""


@dataclass(frozen=True)
class OpeSettings:
    enabled: bool = False
    target: Union[str, tuple[float, ...]] = "uniform"
    mc_grid: tuple[int, ...] = (1000,)


@dataclass(frozen=True)
class DiagnoseSettings:
    delta: float = 0.0
    c: float = 0.25
    t_grid: tuple[int, ...] = (1000, 10000)
    n_trials: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    instance: BanditInstance
    policies: tuple[PolicyConfig, ...]
    horizon: int
    n_trials: int
    base_seed: int
    binarize: bool = False
    checkpoints: Optional[tuple[int, ...]] = None
    ope: OpeSettings = field(default_factory=OpeSettings)
    diagnose: DiagnoseSettings = field(default_factory=DiagnoseSettings)

    @property
    def run_instance(self) -> BanditInstance:
        """The instance trials actually see (binarization wrapper applied)."""
        return binarized(self.instance) if self.binarize else self.instance


def _arm_to_dict(arm) -> dict:
    if isinstance(arm, BernoulliArm):
        return {"kind": "bernoulli", "mean": arm.mean}
    if isinstance(arm, DiscreteArm):
        return {"kind": "discrete", "values": list(arm.values), "probs": list(arm.probs)}
    if isinstance(arm, BetaArm):
        return {"kind": "beta", "a": arm.a, "b": arm.b}
    raise ConfigError(f"instance.arms: cannot serialize arm kind {arm.kind!r}")


def _arm_from_dict(spec: dict, path: str):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{path}: each arm needs a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "bernoulli":
            return BernoulliArm(mean=float(spec["mean"]))
        if kind == "discrete":
            return DiscreteArm(
                values=tuple(float(v) for v in spec["values"]),
                probs=tuple(float(p) for p in spec["probs"]),
            )
        if kind == "beta":
            return BetaArm(a=float(spec["a"]), b=float(spec["b"]))
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown arm kind {kind!r}")


def _policy_from_dict(spec: dict, path: str) -> PolicyConfig:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{path}: each policy needs a 'kind' key")
    allowed = {"kind", "sigma_sq", "mc_samples", "mc_smoothing", "klucb_tol", "rng_stream"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return PolicyConfig(**spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}: required key missing")
    return table[key]


def from_dict(raw: dict) -> ExperimentConfig:
    """Build and validate a config from plain nested dicts."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")

    inst_tab = _require(raw, "instance", "")
    arm_specs = _require(inst_tab, "arms", "instance")
    if not isinstance(arm_specs, list) or not arm_specs:
        raise ConfigError("instance.arms: need a nonempty list of arms")
    arms = tuple(
        _arm_from_dict(spec, f"instance.arms[{i}]") for i, spec in enumerate(arm_specs)
    )
    try:
        instance = BanditInstance(arms)
    except ValueError as exc:
        raise ConfigError(f"instance: {exc}") from exc
    binarize = bool(inst_tab.get("binarize", False))

    run_tab = _require(raw, "run", "")
    horizon = int(_require(run_tab, "horizon", "run"))
    n_trials = int(_require(run_tab, "n_trials", "run"))
    base_seed = int(_require(run_tab, "base_seed", "run"))
    if horizon < instance.n_arms:
        raise ConfigError(
            f"run.horizon: must be at least the number of arms ({instance.n_arms})"
        )
    if n_trials < 1:
        raise ConfigError("run.n_trials: must be >= 1")
    if base_seed < 0:
        raise ConfigError("run.base_seed: must be >= 0")
    checkpoints = None
    if "checkpoints" in run_tab:
        cps = tuple(int(t) for t in run_tab["checkpoints"])
        if not cps or any(t < 1 or t > horizon for t in cps) or list(cps) != sorted(set(cps)):
            raise ConfigError(
                "run.checkpoints: must be strictly increasing within [1, horizon]"
            )
        checkpoints = cps

    pol_specs = _require(raw, "policies", "")
    if not isinstance(pol_specs, list) or not pol_specs:
        raise ConfigError("policies: need a nonempty list")
    policies = tuple(
        _policy_from_dict(spec, f"policies[{i}]") for i, spec in enumerate(pol_specs)
    )

    ope_tab = raw.get("ope", {})
    target = ope_tab.get("target", "uniform")
    if target != "uniform":
        target = tuple(float(p) for p in target)
        if len(target) != instance.n_arms:
            raise ConfigError(
                f"ope.target: needs {instance.n_arms} probabilities, got {len(target)}"
            )
        if any(p < 0 for p in target) or abs(sum(target) - 1.0) > 1e-9:
            raise ConfigError("ope.target: must be a probability vector summing to 1")
    mc_grid = tuple(int(m) for m in ope_tab.get("mc_samples", [1000]))
    if any(m < 1 for m in mc_grid):
        raise ConfigError("ope.mc_samples: entries must be >= 1")
    ope = OpeSettings(
        enabled=bool(ope_tab.get("enabled", False)), target=target, mc_grid=mc_grid
    )

    diag_tab = raw.get("diagnose", {})
    t_grid = tuple(int(t) for t in diag_tab.get("t_grid", [1000, 10000]))
    if any(t < 2 for t in t_grid) or list(t_grid) != sorted(set(t_grid)):
        raise ConfigError("diagnose.t_grid: must be strictly increasing with entries >= 2")
    delta = float(diag_tab.get("delta", 0.0))
    c = float(diag_tab.get("c", 0.25))
    if delta < 0.0:
        raise ConfigError("diagnose.delta: must be >= 0")
    if not 0.0 < c <= 0.25:
        raise ConfigError("diagnose.c: must lie in (0, 1/4]")
    diag_trials = int(diag_tab.get("n_trials", 200))
    if diag_trials < 1:
        raise ConfigError("diagnose.n_trials: must be >= 1")
    diagnose = DiagnoseSettings(delta=delta, c=c, t_grid=t_grid, n_trials=diag_trials)

    return ExperimentConfig(
        instance=instance,
        policies=policies,
        horizon=horizon,
        n_trials=n_trials,
        base_seed=base_seed,
        binarize=binarize,
        checkpoints=checkpoints,
        ope=ope,
        diagnose=diagnose,
    )


def to_dict(cfg: ExperimentConfig) -> dict:
    """Inverse of from_dict; from_dict(to_dict(cfg)) == cfg."""
    out: dict = {
        "instance": {
            "arms": [_arm_to_dict(arm) for arm in cfg.instance.arms],
            "binarize": cfg.binarize,
        },
        "run": {
            "horizon": cfg.horizon,
            "n_trials": cfg.n_trials,
            "base_seed": cfg.base_seed,
        },
        "policies": [
            {k: v for k, v in dataclasses.asdict(p).items() if v is not None}
            for p in cfg.policies
        ],
        "ope": {
            "enabled": cfg.ope.enabled,
            "target": "uniform" if cfg.ope.target == "uniform" else list(cfg.ope.target),
            "mc_samples": list(cfg.ope.mc_grid),
        },
        "diagnose": {
            "delta": cfg.diagnose.delta,
            "c": cfg.diagnose.c,
            "t_grid": list(cfg.diagnose.t_grid),
            "n_trials": cfg.diagnose.n_trials,
        },
    }
    if cfg.checkpoints is not None:
        out["run"]["checkpoints"] = list(cfg.checkpoints)
    return out


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML-syntax config file."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML ({exc})") from exc
    return from_dict(raw)
