"""JSON experiment configuration.  Unknown keys are errors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

EXPERIMENTS = ("wholespace", "bounded", "validate", "decompose", "plot", "kernel-dump")
SUITES = ("strangfix", "identities", "oracle")


class ConfigError(ValueError):
    pass


def h_rule(name: str, i_min: int, i_max: int) -> list[float]:
    """Named spacing sequences: 'wholespace' h = 12/(18+6i), 'bounded' h = 1/(5+10i)."""
    if name == "wholespace":
        return [12.0 / (18 + 6 * i) for i in range(i_min, i_max + 1)]
    if name == "bounded":
        return [1.0 / (5 + 10 * i) for i in range(i_min, i_max + 1)]
    raise ConfigError(f"unknown h rule {name!r}")


@dataclass
class KernelCfg:
    ell: int = 2
    k: int = 2
    variant: str = "div"


@dataclass
class BoundedCfg:
    omega: list = dc_field(default_factory=lambda: [[0.0, 0.0], [1.0, 1.0]])
    V: list = dc_field(default_factory=lambda: [[0.1, 0.1], [0.9, 0.9]])
    C: float | None = None
    eps: float = 1e-3
    matern_shape: float | None = None
    margin: float = 0.0
    parts: list = dc_field(default_factory=lambda: ["div"])


@dataclass
class ExperimentConfig:
    experiment: str
    field: str | None = None  # builtin name
    field_csv: str | None = None
    kernel: KernelCfg = dc_field(default_factory=KernelCfg)
    alpha: list = dc_field(default_factory=lambda: [0, 0])
    h: list = dc_field(default_factory=list)
    sample_box: list = dc_field(default_factory=lambda: [[0.0, 0.0], [12.0, 12.0]])
    eval_box: list = dc_field(default_factory=lambda: [[5.5, 5.5], [6.5, 6.5]])
    eval_mesh: int = 20
    window: int = 5
    truncation: dict = dc_field(default_factory=lambda: {"mode": "all"})
    taper: bool = False  # smooth taper of the samples toward the sample-box edge
    bounded: BoundedCfg = dc_field(default_factory=BoundedCfg)
    suites: list = dc_field(default_factory=lambda: list(SUITES))
    report: str | None = None  # input report CSV for the plot command
    dump_points: list = dc_field(default_factory=list)
    outputs: dict = dc_field(default_factory=dict)

    def output(self, key: str, default: str) -> str:
        return self.outputs.get(key, default)


_TOP = {"experiment", "field", "kernel", "alpha", "h", "h_rule", "sample_box", "eval_box", "eval_mesh",
        "window", "truncation", "taper", "bounded", "suites", "report", "dump_points", "outputs"}
_KERNEL = {"ell", "k", "variant"}
_BOUNDED = {"omega", "V", "C", "eps", "matern_shape", "margin", "parts"}
_TRUNC = {"mode", "radius", "tail_tol"}
_OUTPUTS = {"report", "plot", "fields", "validation", "dump"}
_H_RULE = {"name", "i_min", "i_max"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _box(v, where: str) -> list:
    try:
        lo, hi = [[float(a) for a in p] for p in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be [[lo...], [hi...]]") from None
    if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
        raise ConfigError(f"{where} must have lo < hi on every axis")
    return [lo, hi]


def parse_config(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    _check_keys(raw, _TOP, "config")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    cfg = ExperimentConfig(exp)

    fld = raw.get("field")
    if isinstance(fld, dict):
        _check_keys(fld, {"csv"}, "field")
        p = Path(fld["csv"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        cfg.field_csv = str(p)
    elif fld is not None:
        cfg.field = str(fld)

    if "kernel" in raw:
        _check_keys(raw["kernel"], _KERNEL, "kernel")
        cfg.kernel = KernelCfg(**{**KernelCfg().__dict__, **raw["kernel"]})
        if cfg.kernel.variant not in ("div", "curl"):
            raise ConfigError("kernel.variant must be div or curl")
        if not 1 <= int(cfg.kernel.k) <= int(cfg.kernel.ell):
            raise ConfigError("kernel needs 1 <= k <= ell")

    if "alpha" in raw:
        cfg.alpha = [int(a) for a in raw["alpha"]]
        if any(a < 0 for a in cfg.alpha):
            raise ConfigError("alpha entries must be non-negative")

    if "h" in raw and "h_rule" in raw:
        raise ConfigError("give either h or h_rule, not both")
    if "h" in raw:
        cfg.h = [float(v) for v in raw["h"]]
    elif "h_rule" in raw:
        r = raw["h_rule"]
        _check_keys(r, _H_RULE, "h_rule")
        cfg.h = h_rule(r["name"], int(r["i_min"]), int(r["i_max"]))
    if any(h <= 0 for h in cfg.h):
        raise ConfigError("h values must be positive")
    if any(b >= a for a, b in zip(cfg.h, cfg.h[1:])):
        raise ConfigError("h list must be strictly decreasing")

    if "sample_box" in raw:
        cfg.sample_box = _box(raw["sample_box"], "sample_box")
    if "eval_box" in raw:
        cfg.eval_box = _box(raw["eval_box"], "eval_box")
    if "eval_mesh" in raw:
        cfg.eval_mesh = int(raw["eval_mesh"])
        if cfg.eval_mesh < 1:
            raise ConfigError("eval_mesh must be positive")
    if "window" in raw:
        cfg.window = int(raw["window"])
        if cfg.window < 2:
            raise ConfigError("slope window needs at least two points")

    if "truncation" in raw:
        _check_keys(raw["truncation"], _TRUNC, "truncation")
        cfg.truncation = dict(raw["truncation"])
        if cfg.truncation.get("mode", "all") not in ("all", "radius"):
            raise ConfigError("truncation.mode must be all or radius")
    if "taper" in raw:
        if not isinstance(raw["taper"], bool):
            raise ConfigError("taper must be true or false")
        cfg.taper = raw["taper"]

    if "bounded" in raw:
        _check_keys(raw["bounded"], _BOUNDED, "bounded")
        b = {**BoundedCfg().__dict__, **raw["bounded"]}
        b["omega"] = _box(b["omega"], "bounded.omega")
        b["V"] = _box(b["V"], "bounded.V")
        if any(p not in ("div", "curl") for p in b["parts"]):
            raise ConfigError("bounded.parts entries must be div or curl")
        cfg.bounded = BoundedCfg(**b)

    if "suites" in raw:
        bad = [s for s in raw["suites"] if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s): {', '.join(bad)}")
        cfg.suites = list(raw["suites"])
    if "report" in raw:
        p = Path(raw["report"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        cfg.report = str(p)
    if "dump_points" in raw:
        cfg.dump_points = [[float(a) for a in p] for p in raw["dump_points"]]
    if "outputs" in raw:
        _check_keys(raw["outputs"], _OUTPUTS, "outputs")
        cfg.outputs = dict(raw["outputs"])

    _check_experiment(cfg)
    return cfg


def _check_experiment(cfg: ExperimentConfig) -> None:
    if cfg.experiment in ("wholespace", "bounded"):
        if cfg.field is None:
            raise ConfigError(f"{cfg.experiment} needs a builtin field (exact parts are required)")
        if len(cfg.h) < 1:
            raise ConfigError("h list is empty")
    if cfg.experiment == "wholespace":
        lo, hi = cfg.sample_box
        elo, ehi = cfg.eval_box
        if any(a < b for a, b in zip(elo, lo)) or any(a > b for a, b in zip(ehi, hi)):
            raise ConfigError("eval_box must lie inside sample_box")
    if cfg.experiment == "bounded" and cfg.bounded.C is None:
        raise ConfigError("bounded.C is required (only its order of magnitude is fixed by theory)")
    if cfg.experiment == "decompose" and cfg.field is None and cfg.field_csv is None:
        raise ConfigError("decompose needs a field")
    if cfg.experiment == "plot" and cfg.report is None:
        raise ConfigError("plot needs a report CSV path")
    if cfg.experiment == "kernel-dump" and not cfg.dump_points:
        raise ConfigError("kernel-dump needs dump_points")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path.parent)
