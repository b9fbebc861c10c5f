"""Training session orchestration.

One run = one network trained on one dataset, with certification bounds
computed on a cadence, regions classified, operator commands applied at
epoch boundaries only, and every epoch appended to the run log.

Certification stays on its side of the fence: the training step sees a
learning rate and gradients, never bound values. When guidance is on, the
single scalar distance-to-cloud-bottom modulates the learning rate and
nothing else crosses.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .bounds import CloudRegion, YesBoundSet
from .config import ConfigError, SessionConfig, TaskSpec
from .linalg import Matrix
from .logio import CsvWriter, JsonlWriter
from .mlp import (
    LrSchedule,
    MlpParams,
    TrainingFault,
    backward,
    forward,
    init_optimizer,
    init_params,
    loss_mse,
    optimizer_step,
    weight_change_norm,
)
from .tasks import (
    Dataset,
    ImagePatchPlan,
    gen_denoising,
    gen_phase_retrieval,
    gen_quadratic_image,
    gen_synthetic_digits,
)

PAUSE_POLL_SECONDS = 0.02


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    lr: float
    weight_change: float
    region: CloudRegion
    region_stale: bool
    guidance: bool
    bounds: YesBoundSet | None = None
    events: list = field(default_factory=list)
    wall_time_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "type": "epoch",
            "epoch": self.epoch,
            "loss": self.loss,
            "lr": self.lr,
            "weight_change": self.weight_change,
            "region": self.region.value,
            "region_stale": self.region_stale,
            "guidance": self.guidance,
            "bounds": None if self.bounds is None else self.bounds.to_dict(),
            "events": self.events,
            "wall_time_ms": self.wall_time_ms,
        }


@dataclass
class RunResult:
    records: list
    params: MlpParams
    reason: str  # max_epochs | control | stop_rule | diverged
    diverged: bool
    dataset: Dataset

    def first_epoch_in(self, region: CloudRegion) -> int | None:
        for r in self.records:
            if r.region is region:
                return r.epoch
        return None

    def summary(self) -> dict:
        last = self.records[-1] if self.records else None
        return {
            "epochs": len(self.records),
            "reason": self.reason,
            "final_loss": None if last is None else last.loss,
            "final_region": None if last is None else last.region.value,
            "first_green_epoch": self.first_epoch_in(CloudRegion.GREEN),
            "diverged": self.diverged,
        }


def build_dataset(task: TaskSpec) -> Dataset:
    params = dict(task.params)
    if task.kind == "phase_retrieval":
        return gen_phase_retrieval(seed=task.seed, **params)
    if task.kind == "denoising":
        return gen_denoising(seed=task.seed, **params)
    if task.kind == "synthetic_digits":
        return gen_synthetic_digits(seed=task.seed, **params)
    if task.kind == "digits":
        from .mnist import load_digit_task

        for key in ("images_path", "labels_path"):
            if key not in params:
                raise ConfigError(f"task.params.{key}", "required for digits")
        return load_digit_task(
            params["images_path"], params["labels_path"], params.get("count")
        )
    if task.kind == "quadratic_image":
        from .pgm import read_pgm

        if "image_path" not in params:
            raise ConfigError(
                "task.params.image_path", "required for quadratic_image"
            )
        plan = ImagePatchPlan(
            patch_size=params.get("patch_size", 8),
            sensing_seed=params.get("sensing_seed", 0),
            noise_std=params.get("noise_std", 0.0),
            operator=params.get("operator", "random"),
            blur_sigma=params.get("blur_sigma", 1.0),
        )
        return gen_quadratic_image(read_pgm(params["image_path"]), plan, seed=task.seed)
    raise ConfigError("task.kind", f"unknown task {task.kind!r}")


def guidance_hook(d_k: float, base_lr: float, gain: float, scale: float, cap: float) -> float:
    """Learning-rate modulation from the single permitted scalar.

    effective = base * (1 + gain * min(d_k / scale, cap)); monotone in d_k
    and inert when gain is zero or d_k is zero.
    """
    if d_k < 0:
        raise ValueError(f"guidance distance must be >= 0, got {d_k}")
    return base_lr * (1.0 + gain * min(d_k / scale, cap))


def stop_rule(records: list, config: SessionConfig) -> bool:
    """Stop when settled in green: latest region green and mean weight
    change over the window below threshold."""
    if not records:
        raise ValueError("stop_rule needs a nonempty window")
    if len(records) < config.stop.window:
        return False
    window = records[-config.stop.window:]
    if window[-1].region is not CloudRegion.GREEN:
        return False
    mean_change = sum(r.weight_change for r in window) / len(window)
    return mean_change < config.stop.weight_change_threshold


def plateau_detector(records: list, rel_threshold: float, window_len: int) -> dict | None:
    """Flat-loss alarm: fires when every consecutive relative loss change
    in the window is below rel_threshold. The event names the region so a
    plateau inside the cloud is directly visible."""
    if len(records) < window_len:
        return None
    losses = [r.loss for r in records[-window_len:]]
    for prev, cur in zip(losses, losses[1:]):
        denom = max(abs(prev), 1e-300)
        if abs(cur - prev) / denom >= rel_threshold:
            return None
    return {"kind": "plateau", "region": records[-1].region.value}


class _Persister:
    def __init__(self, config: SessionConfig):
        self.jsonl = None
        self.csv = None
        if config.outputs.jsonl_path:
            self.jsonl = JsonlWriter(config.outputs.jsonl_path)
            self.jsonl.write(
                {
                    "type": "header",
                    "version": 1,
                    "config": _config_dict(config),
                }
            )
        if config.outputs.csv_path:
            self.csv = CsvWriter(config.outputs.csv_path)

    def record(self, rec: EpochRecord) -> None:
        d = rec.to_dict()
        if self.jsonl:
            self.jsonl.write(d)
        if self.csv:
            self.csv.write_row(d)

    def trailer(self, reason: str, last_epoch: int) -> None:
        if self.jsonl:
            self.jsonl.write(
                {"type": "stopped", "reason": reason, "epoch": last_epoch}
            )

    def close(self) -> None:
        if self.jsonl:
            self.jsonl.close()
        if self.csv:
            self.csv.close()


def _config_dict(config: SessionConfig) -> dict:
    from .config import config_to_dict

    return config_to_dict(config)


def _batches(perm: np.ndarray, batch_size: int):
    for start in range(0, perm.shape[0], batch_size):
        yield perm[start:start + batch_size]


def run_session(
    config: SessionConfig,
    dataset: Dataset | None = None,
    controls=None,
    on_record=None,
) -> RunResult:
    """Run one training session to completion.

    controls, if given, must expose drain(epoch) -> list[ControlCommand];
    it is polled exactly at epoch boundaries. on_record(record) is called
    after each epoch is persisted.
    """
    if dataset is None:
        dataset = build_dataset(config.task)
    x: Matrix = dataset.x
    y: Matrix = dataset.y
    n, d = x.shape
    layers = config.network.layers
    if layers[0] != n:
        raise ConfigError(
            "network.layers", f"input dim {layers[0]} does not match data dim {n}"
        )
    if layers[-1] != y.shape[0]:
        raise ConfigError(
            "network.layers",
            f"output dim {layers[-1]} does not match target dim {y.shape[0]}",
        )
    if config.batch_size > d:
        raise ConfigError(
            "batch_size", f"must be <= {d} samples, got {config.batch_size}"
        )
    depth = config.network.depth()
    max_degree = config.resolved_max_degree()
    if max_degree > depth - 1:
        raise ConfigError(
            "max_degree", f"must be <= {depth - 1} for a {depth}-layer network"
        )
    activations = config.network.activation_kinds()
    if not activations[-1].feasible(y):
        raise ConfigError(
            "network.activations",
            f"targets are outside the range of the final activation "
            f"{activations[-1].value!r}",
        )

    params = init_params(
        layers, config.network.use_bias, activations, seed=config.seed
    )
    opt_state = init_optimizer(config.optimizer.kind, params)
    shuffle_rng = np.random.default_rng([config.seed, 1])

    schedule = LrSchedule(
        eta0=config.optimizer.eta0,
        decay_factor=config.optimizer.decay_factor,
        period_epochs=config.optimizer.period_epochs,
    )
    schedule_anchor = 1  # epoch at which the current schedule started
    guidance_on = config.guidance.enabled
    paused = False
    region = CloudRegion.RED
    last_dk: float | None = None
    records: list[EpochRecord] = []
    persister = _Persister(config)
    reason = "max_epochs"
    diverged = False
    plateaued = False

    def set_paused(value: bool) -> None:
        nonlocal paused
        paused = value
        hook = getattr(controls, "set_paused", None)
        if hook is not None:
            hook(value)

    try:
        epoch = 0
        while epoch < config.max_epochs:
            epoch += 1
            tick = time.perf_counter()
            applied: list[dict] = []
            stop_now = False

            def apply_commands(commands) -> None:
                nonlocal stop_now, guidance_on, schedule, schedule_anchor
                for cmd in commands:
                    if cmd.kind == "pause":
                        set_paused(True)
                    elif cmd.kind == "resume":
                        set_paused(False)
                    elif cmd.kind == "stop":
                        stop_now = True
                    elif cmd.kind == "set_learning_rate":
                        schedule = LrSchedule(
                            eta0=cmd.value,
                            decay_factor=config.optimizer.decay_factor,
                            period_epochs=config.optimizer.period_epochs,
                        )
                        schedule_anchor = epoch
                    elif cmd.kind == "toggle_guidance":
                        guidance_on = cmd.enabled
                    applied.append({"kind": "control_applied", "command": cmd.to_dict()})

            if controls is not None:
                apply_commands(controls.drain(epoch))
                while paused and not stop_now:
                    time.sleep(PAUSE_POLL_SECONDS)
                    apply_commands(controls.drain(epoch))
            if stop_now:
                reason = "control"
                epoch -= 1  # this epoch never ran
                break

            lr = schedule.value(epoch - schedule_anchor)
            if guidance_on and last_dk is not None:
                lr = guidance_hook(
                    last_dk,
                    lr,
                    config.guidance.gain,
                    config.guidance.scale,
                    config.guidance.cap,
                )

            prev_params = params.copy()
            try:
                # a diverging step surfaces as non-finite gradients; silence
                # the intermediate overflow warnings and let the fault speak
                with np.errstate(over="ignore", invalid="ignore"):
                    perm = shuffle_rng.permutation(d)
                    for idx in _batches(perm, config.batch_size):
                        grads = backward(params, x[:, idx], y[:, idx])
                        optimizer_step(params, grads, opt_state, lr)
            except TrainingFault:
                diverged = True

            with np.errstate(over="ignore", invalid="ignore"):
                weight_change = weight_change_norm(prev_params, params)
                fw = forward(params, x)
                loss = loss_mse(fw.output, y)
            if not np.isfinite(loss):
                diverged = True

            events = list(applied)
            bound_set = None
            stale = True
            if not diverged and (epoch - 1) % config.bound_cadence == 0:
                bound_set = bounds_mod.yes_bound_set(
                    fw.layer_outputs[1:depth],
                    x,
                    y,
                    max_degree,
                    activations,
                    use_bias=config.network.use_bias,
                    rcond=config.rcond,
                    monotone=config.monotone,
                )
                new_region = bounds_mod.classify_region(loss, bound_set)
                if new_region is not region:
                    events.append(
                        {"kind": "entered_region", "region": new_region.value}
                    )
                region = new_region
                last_dk = bounds_mod.guidance_distance(loss, bound_set)
                stale = False

            record = EpochRecord(
                epoch=epoch,
                loss=loss,
                lr=lr,
                weight_change=weight_change,
                region=region,
                region_stale=stale,
                guidance=guidance_on,
                bounds=bound_set,
                events=events,
            )
            records.append(record)

            if diverged:
                record.events.append({"kind": "stopped", "reason": "diverged"})
                reason = "diverged"
            else:
                if config.plateau.enabled:
                    alarm = plateau_detector(
                        records, config.plateau.rel_threshold, config.plateau.window
                    )
                    if alarm is not None and not plateaued:
                        record.events.append(alarm)
                        plateaued = True
                    elif alarm is None:
                        plateaued = False
                if config.stop.enabled and stop_rule(records, config):
                    record.events.append({"kind": "stopped", "reason": "stop_rule"})
                    reason = "stop_rule"

            record.wall_time_ms = (time.perf_counter() - tick) * 1000.0
            persister.record(record)
            if on_record is not None:
                on_record(record)
            if diverged or reason in ("stop_rule",):
                break
            if config.throttle_ms > 0:
                remainder = config.throttle_ms / 1000.0 - (
                    time.perf_counter() - tick
                )
                if remainder > 0:
                    time.sleep(remainder)
        persister.trailer(reason, epoch)
    finally:
        persister.close()

    return RunResult(
        records=records,
        params=params,
        reason=reason,
        diverged=diverged,
        dataset=dataset,
    )
