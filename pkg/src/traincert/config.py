"""Run configuration and operator control commands.

Everything is a plain dataclass with a JSON-dict round trip. Parse errors
carry the dotted path of the offending field so a bad config file can be
fixed without reading a traceback.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .mlp import ActivationKind

TASK_KINDS = (
    "phase_retrieval",
    "denoising",
    "quadratic_image",
    "digits",
    "synthetic_digits",
)

OPTIMIZER_KINDS = ("sgd", "adam")

# Per-task generator keyword allowlists; anything else in task.params is a typo.
_TASK_PARAM_KEYS = {
    "phase_retrieval": {"n", "d"},
    "denoising": {
        "n",
        "num_signals",
        "noise_per_signal",
        "noise_param",
        "noise_is_variance",
    },
    "quadratic_image": {
        "image_path",
        "patch_size",
        "sensing_seed",
        "noise_std",
        "operator",
        "blur_sigma",
    },
    "digits": {"images_path", "labels_path", "count"},
    "synthetic_digits": {"n_features", "count", "noise_std"},
}


class ConfigError(ValueError):
    """A config field failed validation; .path points at the field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class TaskSpec:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)


@dataclass
class NetworkSpec:
    # Full width chain, input dim first, output dim last; K = len - 1 layers.
    layers: list
    activations: list | None = None
    use_bias: bool = True

    def depth(self) -> int:
        return len(self.layers) - 1

    def activation_kinds(self) -> list:
        if self.activations is None:
            return [ActivationKind.RELU] * (self.depth() - 1) + [
                ActivationKind.IDENTITY
            ]
        return [ActivationKind.parse(a) for a in self.activations]


@dataclass
class OptimizerSpec:
    kind: str = "adam"
    eta0: float = 1e-3
    decay_factor: float = 1.0
    period_epochs: int = 50


@dataclass
class GuidanceSpec:
    enabled: bool = False
    gain: float = 0.5
    scale: float = 1.0
    cap: float = 1.0


@dataclass
class StopSpec:
    enabled: bool = False
    weight_change_threshold: float = 1e-4
    window: int = 10


@dataclass
class PlateauSpec:
    enabled: bool = True
    rel_threshold: float = 1e-3
    window: int = 25


@dataclass
class OutputSpec:
    jsonl_path: str | None = None
    csv_path: str | None = None


@dataclass
class SessionConfig:
    task: TaskSpec
    network: NetworkSpec
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    batch_size: int = 20
    max_epochs: int = 100
    bound_cadence: int = 1
    max_degree: int | None = None
    monotone: bool = False
    guidance: GuidanceSpec = field(default_factory=GuidanceSpec)
    stop: StopSpec = field(default_factory=StopSpec)
    plateau: PlateauSpec = field(default_factory=PlateauSpec)
    rcond: float | None = None
    seed: int = 0
    # Minimum wall time per epoch; lets a served session pace itself so
    # operator commands have epochs to land between.
    throttle_ms: float = 0.0
    outputs: OutputSpec = field(default_factory=OutputSpec)

    def resolved_max_degree(self) -> int:
        if self.max_degree is None:
            return self.network.depth() - 1
        return self.max_degree


# ---------------------------------------------------------------------------
# dict -> config


def _want(value, types, path, what):
    if isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        # bool is an int subclass; a bare True where a number belongs is a bug
        raise ConfigError(path, f"expected {what}, got {value!r}")
    if not isinstance(value, types):
        raise ConfigError(path, f"expected {what}, got {type(value).__name__}")
    return value


def _as_int(value, path, minimum=None):
    v = _want(value, int, path, "an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    return v


def _as_float(value, path, positive=False, nonnegative=False):
    v = float(_want(value, (int, float), path, "a number"))
    if positive and not v > 0:
        raise ConfigError(path, f"must be > 0, got {v}")
    if nonnegative and v < 0:
        raise ConfigError(path, f"must be >= 0, got {v}")
    return v


def _as_bool(value, path):
    return _want(value, bool, path, "a boolean")


def _as_str(value, path, choices=None):
    v = _want(value, str, path, "a string")
    if choices is not None and v not in choices:
        raise ConfigError(path, f"must be one of {sorted(choices)}, got {v!r}")
    return v


def _check_keys(d, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(
            f"{path}.{sorted(extra)[0]}" if path else sorted(extra)[0],
            "unknown field",
        )


def _subdict(d, key, path):
    v = d.get(key, {})
    return _want(v, dict, f"{path}{key}", "an object")


def _task_from_dict(d: dict) -> TaskSpec:
    _check_keys(d, {"kind", "seed", "params"}, "task")
    if "kind" not in d:
        raise ConfigError("task.kind", "required")
    kind = _as_str(d["kind"], "task.kind", choices=TASK_KINDS)
    seed = _as_int(d.get("seed", 0), "task.seed")
    params = _want(d.get("params", {}), dict, "task.params", "an object")
    allowed = _TASK_PARAM_KEYS[kind]
    for key in params:
        if key not in allowed:
            raise ConfigError(
                f"task.params.{key}", f"not a parameter of {kind}"
            )
    return TaskSpec(kind=kind, seed=seed, params=dict(params))


def _network_from_dict(d: dict) -> NetworkSpec:
    _check_keys(d, {"layers", "activations", "use_bias"}, "network")
    if "layers" not in d:
        raise ConfigError("network.layers", "required")
    layers = _want(d["layers"], list, "network.layers", "a list")
    if len(layers) < 2:
        raise ConfigError("network.layers", "need at least input and output dims")
    layers = [
        _as_int(v, f"network.layers[{i}]", minimum=1) for i, v in enumerate(layers)
    ]
    activations = d.get("activations")
    if activations is not None:
        activations = _want(activations, list, "network.activations", "a list")
        if len(activations) != len(layers) - 1:
            raise ConfigError(
                "network.activations",
                f"need {len(layers) - 1} entries for {len(layers) - 1} layers, "
                f"got {len(activations)}",
            )
        out = []
        for i, a in enumerate(activations):
            name = _as_str(a, f"network.activations[{i}]")
            try:
                ActivationKind.parse(name)
            except ValueError as exc:
                raise ConfigError(f"network.activations[{i}]", str(exc)) from None
            out.append(name)
        activations = out
    use_bias = _as_bool(d.get("use_bias", True), "network.use_bias")
    return NetworkSpec(layers=layers, activations=activations, use_bias=use_bias)


def _optimizer_from_dict(d: dict) -> OptimizerSpec:
    _check_keys(d, {"kind", "eta0", "decay_factor", "period_epochs"}, "optimizer")
    kind = _as_str(d.get("kind", "adam"), "optimizer.kind", choices=OPTIMIZER_KINDS)
    eta0 = _as_float(d.get("eta0", 1e-3), "optimizer.eta0", positive=True)
    decay = _as_float(d.get("decay_factor", 1.0), "optimizer.decay_factor")
    if not 0 < decay <= 1:
        raise ConfigError("optimizer.decay_factor", f"must be in (0, 1], got {decay}")
    period = _as_int(d.get("period_epochs", 50), "optimizer.period_epochs", minimum=1)
    return OptimizerSpec(kind=kind, eta0=eta0, decay_factor=decay, period_epochs=period)


def _guidance_from_dict(d: dict) -> GuidanceSpec:
    _check_keys(d, {"enabled", "gain", "scale", "cap"}, "guidance")
    return GuidanceSpec(
        enabled=_as_bool(d.get("enabled", False), "guidance.enabled"),
        gain=_as_float(d.get("gain", 0.5), "guidance.gain", nonnegative=True),
        scale=_as_float(d.get("scale", 1.0), "guidance.scale", positive=True),
        cap=_as_float(d.get("cap", 1.0), "guidance.cap", nonnegative=True),
    )


def _stop_from_dict(d: dict) -> StopSpec:
    _check_keys(d, {"enabled", "weight_change_threshold", "window"}, "stop")
    return StopSpec(
        enabled=_as_bool(d.get("enabled", False), "stop.enabled"),
        weight_change_threshold=_as_float(
            d.get("weight_change_threshold", 1e-4),
            "stop.weight_change_threshold",
            positive=True,
        ),
        window=_as_int(d.get("window", 10), "stop.window", minimum=1),
    )


def _plateau_from_dict(d: dict) -> PlateauSpec:
    _check_keys(d, {"enabled", "rel_threshold", "window"}, "plateau")
    return PlateauSpec(
        enabled=_as_bool(d.get("enabled", True), "plateau.enabled"),
        rel_threshold=_as_float(
            d.get("rel_threshold", 1e-3), "plateau.rel_threshold", positive=True
        ),
        window=_as_int(d.get("window", 25), "plateau.window", minimum=2),
    )


def _outputs_from_dict(d: dict) -> OutputSpec:
    _check_keys(d, {"jsonl_path", "csv_path"}, "outputs")
    jsonl_path = d.get("jsonl_path")
    if jsonl_path is not None:
        jsonl_path = _as_str(jsonl_path, "outputs.jsonl_path")
    csv_path = d.get("csv_path")
    if csv_path is not None:
        csv_path = _as_str(csv_path, "outputs.csv_path")
    return OutputSpec(jsonl_path=jsonl_path, csv_path=csv_path)


_TOP_KEYS = {
    "task",
    "network",
    "optimizer",
    "batch_size",
    "max_epochs",
    "bound_cadence",
    "max_degree",
    "monotone",
    "guidance",
    "stop",
    "plateau",
    "rcond",
    "seed",
    "throttle_ms",
    "outputs",
}


def config_from_dict(d: dict) -> SessionConfig:
    _want(d, dict, "config", "an object")
    _check_keys(d, _TOP_KEYS, "")
    if "task" not in d:
        raise ConfigError("task", "required")
    if "network" not in d:
        raise ConfigError("network", "required")
    task = _task_from_dict(_want(d["task"], dict, "task", "an object"))
    network = _network_from_dict(_want(d["network"], dict, "network", "an object"))
    cfg = SessionConfig(
        task=task,
        network=network,
        optimizer=_optimizer_from_dict(_subdict(d, "optimizer", "")),
        batch_size=_as_int(d.get("batch_size", 20), "batch_size", minimum=1),
        max_epochs=_as_int(d.get("max_epochs", 100), "max_epochs", minimum=0),
        bound_cadence=_as_int(d.get("bound_cadence", 1), "bound_cadence", minimum=1),
        max_degree=(
            None
            if d.get("max_degree") is None
            else _as_int(d["max_degree"], "max_degree", minimum=0)
        ),
        monotone=_as_bool(d.get("monotone", False), "monotone"),
        guidance=_guidance_from_dict(_subdict(d, "guidance", "")),
        stop=_stop_from_dict(_subdict(d, "stop", "")),
        plateau=_plateau_from_dict(_subdict(d, "plateau", "")),
        rcond=(
            None
            if d.get("rcond") is None
            else _as_float(d["rcond"], "rcond", positive=True)
        ),
        seed=_as_int(d.get("seed", 0), "seed"),
        throttle_ms=_as_float(d.get("throttle_ms", 0.0), "throttle_ms", nonnegative=True),
        outputs=_outputs_from_dict(_subdict(d, "outputs", "")),
    )
    if cfg.max_degree is not None and cfg.max_degree > network.depth() - 1:
        raise ConfigError(
            "max_degree",
            f"must be <= {network.depth() - 1} for a {network.depth()}-layer network",
        )
    try:
        network.activation_kinds()
    except ValueError as exc:
        raise ConfigError("network.activations", str(exc)) from None
    return cfg


def config_to_dict(cfg: SessionConfig) -> dict:
    return {
        "task": {
            "kind": cfg.task.kind,
            "seed": cfg.task.seed,
            "params": dict(cfg.task.params),
        },
        "network": {
            "layers": list(cfg.network.layers),
            "activations": (
                None
                if cfg.network.activations is None
                else list(cfg.network.activations)
            ),
            "use_bias": cfg.network.use_bias,
        },
        "optimizer": {
            "kind": cfg.optimizer.kind,
            "eta0": cfg.optimizer.eta0,
            "decay_factor": cfg.optimizer.decay_factor,
            "period_epochs": cfg.optimizer.period_epochs,
        },
        "batch_size": cfg.batch_size,
        "max_epochs": cfg.max_epochs,
        "bound_cadence": cfg.bound_cadence,
        "max_degree": cfg.max_degree,
        "monotone": cfg.monotone,
        "guidance": {
            "enabled": cfg.guidance.enabled,
            "gain": cfg.guidance.gain,
            "scale": cfg.guidance.scale,
            "cap": cfg.guidance.cap,
        },
        "stop": {
            "enabled": cfg.stop.enabled,
            "weight_change_threshold": cfg.stop.weight_change_threshold,
            "window": cfg.stop.window,
        },
        "plateau": {
            "enabled": cfg.plateau.enabled,
            "rel_threshold": cfg.plateau.rel_threshold,
            "window": cfg.plateau.window,
        },
        "rcond": cfg.rcond,
        "seed": cfg.seed,
        "throttle_ms": cfg.throttle_ms,
        "outputs": {
            "jsonl_path": cfg.outputs.jsonl_path,
            "csv_path": cfg.outputs.csv_path,
        },
    }


def default_config_for_task(kind: str) -> SessionConfig:
    """Canonical desk-scale settings per task; the CLI starts from these."""
    if kind == "phase_retrieval":
        return SessionConfig(
            task=TaskSpec(kind=kind),
            network=NetworkSpec(layers=[20] * 6, use_bias=False),
            optimizer=OptimizerSpec(
                kind="adam", eta0=1e-3, decay_factor=0.9, period_epochs=50
            ),
            batch_size=20,
            max_epochs=2000,
        )
    if kind == "denoising":
        return SessionConfig(
            task=TaskSpec(kind=kind),
            network=NetworkSpec(layers=[20] * 6, use_bias=True),
            optimizer=OptimizerSpec(
                kind="adam", eta0=1e-3, decay_factor=0.9, period_epochs=50
            ),
            batch_size=20,
            max_epochs=500,
        )
    if kind == "quadratic_image":
        return SessionConfig(
            task=TaskSpec(kind=kind),
            network=NetworkSpec(layers=[64] * 6, use_bias=True),
            optimizer=OptimizerSpec(
                kind="adam", eta0=1e-3, decay_factor=0.9, period_epochs=50
            ),
            batch_size=16,
            max_epochs=500,
        )
    if kind == "digits":
        return SessionConfig(
            task=TaskSpec(kind=kind),
            network=NetworkSpec(layers=[784, 256, 128, 256, 784], use_bias=True),
            optimizer=OptimizerSpec(
                kind="sgd", eta0=0.5, decay_factor=0.7, period_epochs=50
            ),
            batch_size=50,
            max_epochs=300,
        )
    if kind == "synthetic_digits":
        # hidden widths and the input dimension stay below the sample count
        # (100); at full rank the projection bounds collapse to zero and the
        # cloud degenerates
        return SessionConfig(
            task=TaskSpec(kind=kind, params={"n_features": 50, "noise_std": 0.5}),
            network=NetworkSpec(layers=[50, 64, 64, 64, 64, 784], use_bias=False),
            optimizer=OptimizerSpec(
                kind="adam", eta0=1e-3, decay_factor=0.9, period_epochs=500
            ),
            batch_size=20,
            max_epochs=700,
        )
    raise ConfigError("task.kind", f"must be one of {sorted(TASK_KINDS)}, got {kind!r}")


# ---------------------------------------------------------------------------
# control commands

CONTROL_KINDS = ("pause", "resume", "stop", "set_learning_rate", "toggle_guidance")


@dataclass
class ControlCommand:
    kind: str
    value: float | None = None  # set_learning_rate
    enabled: bool | None = None  # toggle_guidance
    issued_at: float = 0.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "issued_at": self.issued_at}
        if self.kind == "set_learning_rate":
            out["value"] = self.value
        if self.kind == "toggle_guidance":
            out["enabled"] = self.enabled
        return out


def control_from_dict(d: dict) -> ControlCommand:
    _want(d, dict, "control", "an object")
    _check_keys(d, {"kind", "value", "enabled", "issued_at"}, "control")
    if "kind" not in d:
        raise ConfigError("control.kind", "required")
    kind = _as_str(d["kind"], "control.kind", choices=CONTROL_KINDS)
    value = None
    enabled = None
    if kind == "set_learning_rate":
        if "value" not in d:
            raise ConfigError("control.value", "required for set_learning_rate")
        value = _as_float(d["value"], "control.value", positive=True)
    elif "value" in d and d["value"] is not None:
        raise ConfigError("control.value", f"not accepted by {kind}")
    if kind == "toggle_guidance":
        if "enabled" not in d:
            raise ConfigError("control.enabled", "required for toggle_guidance")
        enabled = _as_bool(d["enabled"], "control.enabled")
    elif "enabled" in d and d["enabled"] is not None:
        raise ConfigError("control.enabled", f"not accepted by {kind}")
    issued_at = _as_float(d.get("issued_at", time.time()), "control.issued_at")
    return ControlCommand(kind=kind, value=value, enabled=enabled, issued_at=issued_at)
