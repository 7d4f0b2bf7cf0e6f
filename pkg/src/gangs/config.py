"""Experiment configuration: a sectioned ``key = value`` text file.

Every key except ``[task] name`` has a default, so a config may be partial.
Unknown sections or keys are rejected rather than ignored, so typos surface.
Lists (hidden layer widths) are comma separated; booleans accept
true/false/yes/no/on/off/1/0.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from gangs.evaluation import AttackConfig, GridSpec
from gangs.gang import GangError, GangSpec, MeasuringFn, RbbrConfig
from gangs.pnm import DETERMINISTIC_STOP, FIXED_ITERATIONS, PnmConfig
from gangs.tasks import TASK_NAMES, GaussianMixtureTask, make_task

PRESETS = ("slow-g",)
SLOW_G_LEARNING_RATE = 1e-4


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _widths(s):
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("need at least one hidden width")
    widths = tuple(int(p) for p in parts)
    if min(widths) < 1:
        raise ValueError("hidden widths must be positive")
    return widths


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


_RBBR_KEYS = {
    "steps": _int, "batch_size": _int, "learning_rate": _float, "optimizer": str,
    "beta1": _float, "beta2": _float, "adam_eps": _float, "uniform_fake": _bool,
}

# section -> key -> (attribute, parser)
_SCHEMA = {
    "task": {"name": ("task", str), "seed": ("task_seed", _int)},
    "run": {"master_seed": ("master_seed", _int), "output_dir": ("output_dir", str),
            "jobs": ("jobs", _int)},
    "gang": {"latent_dim": ("latent_dim", _int), "gen_hidden": ("gen_hidden", _widths),
             "clf_hidden": ("clf_hidden", _widths), "phi": ("phi", str),
             "clamp_eps": ("clamp_eps", _float)},
    "pnm": {"mode": ("mode", str), "iterations": ("iterations", _int),
            "eval_samples": ("eval_samples", _int), "rb_ne_tolerance": ("rb_ne_tolerance", _float)},
    "rbbr_g": {k: ("rbbr_g." + k, p) for k, p in _RBBR_KEYS.items()},
    "rbbr_c": {k: ("rbbr_c." + k, p) for k, p in _RBBR_KEYS.items()},
    "attack": {"gen_hidden": ("attack_gen_hidden", _widths),
               "clf_hidden": ("attack_clf_hidden", _widths),
               "steps": ("attack_steps", _int), "restarts": ("attack_restarts", _int),
               "enabled": ("attack_enabled", _bool)},
    "eval": {"samples": ("eval_n", _int), "grid_size": ("grid_size", _int),
             "grid_inflate": ("grid_inflate", _float)},
}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    task_seed: int = 0
    master_seed: int = 0
    output_dir: str = "gangs-run"
    jobs: int = 1
    latent_dim: int = 8
    gen_hidden: tuple = (32, 32)
    clf_hidden: tuple = (32, 32)
    phi: str = "log"
    clamp_eps: float = 1e-7
    mode: str = FIXED_ITERATIONS
    iterations: int = 30
    eval_samples: int = 10_000
    rb_ne_tolerance: float = 0.05
    rbbr_g: RbbrConfig = field(default_factory=RbbrConfig)
    rbbr_c: RbbrConfig = field(default_factory=RbbrConfig)
    attack_gen_hidden: tuple = (32, 32)
    attack_clf_hidden: tuple = (32, 32)
    attack_steps: int = 1000
    attack_restarts: int = 3
    attack_enabled: bool = True
    eval_n: int = 10_000
    grid_size: int = 200
    grid_inflate: float = 0.2

    def make_task(self) -> GaussianMixtureTask:
        return make_task(self.task, seed=self.task_seed)

    def gang_spec(self, task=None) -> GangSpec:
        return GangSpec.for_task(task or self.make_task(), self.latent_dim, self.gen_hidden,
                                 self.clf_hidden, MeasuringFn(self.phi, self.clamp_eps))

    def pnm_config(self) -> PnmConfig:
        return PnmConfig(self.mode, self.iterations, self.rbbr_g, self.rbbr_c, self.eval_samples,
                         self.master_seed, self.rb_ne_tolerance, self.jobs)

    def attack_config(self, spec: GangSpec, restarts=None, steps=None) -> AttackConfig:
        atk_spec = GangSpec.for_task(self.make_task(), self.latent_dim, self.attack_gen_hidden,
                                     self.attack_clf_hidden, spec.phi)
        rbbr = replace(self.rbbr_c, steps=self.attack_steps if steps is None else steps)
        return AttackConfig(atk_spec.gen_arch, atk_spec.clf_arch, rbbr,
                            self.attack_restarts if restarts is None else restarts,
                            self.eval_n)

    def grid(self, task=None) -> GridSpec:
        return GridSpec.around(task or self.make_task(), self.grid_inflate, self.grid_size, self.grid_size)

    def with_preset(self, preset: str) -> "ExperimentConfig":
        if preset == "slow-g":
            return replace(self, rbbr_g=replace(self.rbbr_g, learning_rate=SLOW_G_LEARNING_RATE))
        raise ConfigError("preset", f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")

    def to_ini(self) -> str:
        lines = []
        for section, keys in _SCHEMA.items():
            lines.append(f"[{section}]")
            for key, (attr, _) in keys.items():
                if "." in attr:
                    sub, name = attr.split(".")
                    value = getattr(getattr(self, sub), name)
                else:
                    value = getattr(self, attr)
                lines.append(f"{key} = {_fmt(value)}")
            lines.append("")
        return "\n".join(lines)


def _validate(cfg: ExperimentConfig):
    if cfg.task not in TASK_NAMES:
        raise ConfigError("task.name", f"unknown task {cfg.task!r}; expected one of {', '.join(TASK_NAMES)}")
    checks = [
        ("run.jobs", cfg.jobs >= 1, "must be >= 1"),
        ("gang.latent_dim", cfg.latent_dim >= 1, "must be >= 1"),
        ("pnm.mode", cfg.mode in (DETERMINISTIC_STOP, FIXED_ITERATIONS),
         f"must be {DETERMINISTIC_STOP} or {FIXED_ITERATIONS}"),
        ("pnm.iterations", cfg.iterations >= 1, "must be >= 1"),
        ("pnm.eval_samples", cfg.eval_samples >= 1, "must be >= 1"),
        ("pnm.rb_ne_tolerance", cfg.rb_ne_tolerance >= 0, "must be >= 0"),
        ("attack.steps", cfg.attack_steps >= 0, "must be >= 0"),
        ("attack.restarts", cfg.attack_restarts >= 1, "must be >= 1"),
        ("eval.samples", cfg.eval_n >= 1, "must be >= 1"),
        ("eval.grid_size", cfg.grid_size >= 2, "must be >= 2"),
        ("eval.grid_inflate", cfg.grid_inflate >= 0, "must be >= 0"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(key, msg)
    try:
        MeasuringFn(cfg.phi, cfg.clamp_eps)
    except GangError as exc:
        raise ConfigError("gang.phi", str(exc)) from None
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"unparseable: {exc}") from None
    values, rbbr = {}, {"rbbr_g": {}, "rbbr_c": {}}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            attr, parse = _SCHEMA[section][key]
            try:
                value = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}", str(exc)) from None
            if "." in attr:
                sub, name = attr.split(".")
                rbbr[sub][name] = value
            else:
                values[attr] = value
    if not values.get("task"):
        raise ConfigError("task.name", "missing task name")
    for sub, kw in rbbr.items():
        try:
            values[sub] = RbbrConfig(**kw)
        except GangError as exc:
            raise ConfigError(sub, str(exc)) from None
    return _validate(ExperimentConfig(**values))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)

