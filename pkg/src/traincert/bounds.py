"""Certification bounds built from closed-form least-squares projections.

The engine answers one question about a training run: could a stack of
layer-wise linear projections already explain the data this well? Each
bound walks the layer chain, at every step replacing the layer by the best
linear map onto a target (the final output, or an intermediate snapshot
captured from the live model), applies the activation, and measures the
final residual. A trained loss above these bounds certifies improper
training; a loss below the best of them indicates the optimizer has beaten
every such projection stack.

Degree-0 uses the final target at every step and depends only on the data.
Degree-k bounds route through k intermediate checkpoints taken from the
live model's layer outputs, so they evolve with the run.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import Matrix, ShapeError, as_matrix, augment_ones, frob_norm_sq, pinv
from .mlp import ActivationKind


class InfeasibleTargetError(ValueError):
    """Targets fall outside the output range of the final activation."""


def least_squares_map(target: Matrix, source: Matrix,
                      rcond: float | None = None,
                      source_pinv: Matrix | None = None) -> Matrix:
    """Weight matrix minimizing ||target - A @ source||_F over all A.

    Computed as target @ pinv(source); pass source_pinv to reuse a
    precomputed pseudoinverse.
    """
    target = as_matrix(target, "target")
    source = as_matrix(source, "source")
    if target.shape[1] != source.shape[1]:
        raise ShapeError(
            f"target has {target.shape[1]} columns, source has {source.shape[1]}"
        )
    if source_pinv is None:
        source_pinv = pinv(source, rcond)
    return target @ source_pinv


def _check_feasible(y: Matrix, activation: ActivationKind) -> None:
    if not activation.feasible(y):
        neg = int(np.count_nonzero(y < 0))
        worst = float(y.min())
        raise InfeasibleTargetError(
            f"target has {neg} negative entries (min {worst:g}) but the final "
            f"activation {activation.value!r} only produces nonnegative values"
        )


def _project_step(target: Matrix, current: Matrix, activation: ActivationKind,
                  use_bias: bool, rcond: float | None,
                  current_pinv: Matrix | None = None) -> Matrix:
    """One projection step: fit target from `current`, then activate.

    With bias enabled the source is augmented with a ones row so the fitted
    map carries an additive offset, mirroring the network's hypothesis class.
    """
    src = augment_ones(current) if use_bias else current
    if current_pinv is None:
        current_pinv = pinv(src, rcond)
    return activation.apply(target @ current_pinv @ src)


@dataclass
class Yes0Trace:
    """Per-layer residuals of the data-only projection stack.

    per_layer_error[k] is the normalized residual after k+1 projection
    steps; bound is the final entry.
    """

    per_layer_error: list[float]
    bound: float


def yes0_trace(
    x: Matrix,
    y: Matrix,
    activations: list[ActivationKind],
    use_bias: bool = False,
    rcond: float | None = None,
    x_pinv: Matrix | None = None,
) -> Yes0Trace:
    """Walk the depth of the network projecting directly at the targets.

    Starts from the input and repeatedly fits the best linear map onto y,
    applying each layer's activation in turn. Targets must be feasible for
    the final activation.
    """
    x = as_matrix(x, "input")
    y = as_matrix(y, "target")
    if x.shape[1] != y.shape[1]:
        raise ShapeError(
            f"input has {x.shape[1]} columns, target has {y.shape[1]}"
        )
    if not activations:
        raise ValueError("need at least one activation")
    _check_feasible(y, activations[-1])
    d = y.shape[1]
    current = x
    errors: list[float] = []
    for k, act in enumerate(activations):
        current = _project_step(
            y, current, act, use_bias, rcond,
            current_pinv=x_pinv if k == 0 else None,
        )
        errors.append(frob_norm_sq(y - current) / d)
    return Yes0Trace(per_layer_error=errors, bound=errors[-1])


@dataclass(frozen=True, order=True)
class CheckpointSet:
    """Strictly increasing depth indices in {2, ..., K} selecting which
    captured model outputs serve as intermediate projection targets. Depth
    index t means: use the live model's output after layer t-1."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError(f"checkpoint indices must be strictly increasing: {self.indices}")


def _walk_combination(
    combo: tuple[int, ...],
    model_layer_outputs: list[Matrix],
    x: Matrix,
    y: Matrix,
    activations: list[ActivationKind],
    use_bias: bool,
    rcond: float | None,
    x_pinv: Matrix | None,
) -> float:
    """Residual of one checkpoint routing.

    At step j the projection target is the captured output for the smallest
    checkpoint t in the set with t > j, falling back to y once no
    checkpoint remains.
    """
    depth = len(activations)
    d = y.shape[1]
    current = x
    ptr = 0
    for j in range(1, depth + 1):
        while ptr < len(combo) and combo[ptr] <= j:
            ptr += 1
        if ptr < len(combo):
            target = model_layer_outputs[combo[ptr] - 2]
        else:
            target = y
        current = _project_step(
            target, current, activations[j - 1], use_bias, rcond,
            current_pinv=x_pinv if j == 1 else None,
        )
    return frob_norm_sq(y - current) / d


def _validate_bound_inputs(model_layer_outputs, x, y, activations):
    x = as_matrix(x, "input")
    y = as_matrix(y, "target")
    depth = len(activations)
    # checkpoint candidates are the outputs after layers 1..K-1
    if len(model_layer_outputs) != depth - 1:
        raise ShapeError(
            f"got {len(model_layer_outputs)} intermediate outputs for depth "
            f"{depth}, expected {depth - 1}"
        )
    d = x.shape[1]
    if y.shape[1] != d:
        raise ShapeError(f"input has {d} columns, target has {y.shape[1]}")
    for idx, out in enumerate(model_layer_outputs, start=1):
        out = as_matrix(out, f"layer {idx} output")
        if out.shape[1] != d:
            raise ShapeError(
                f"layer {idx} output has {out.shape[1]} columns, expected {d}"
            )
    return x, y


def yes_k_bound(
    model_layer_outputs: list[Matrix],
    x: Matrix,
    y: Matrix,
    degree: int,
    activations: list[ActivationKind],
    use_bias: bool = False,
    rcond: float | None = None,
    x_pinv: Matrix | None = None,
) -> tuple[float, CheckpointSet]:
    """Best degree-`degree` bound over all checkpoint subsets of that size.

    Enumerates every subset of {2, ..., K} with `degree` elements, walks the
    projection chain for each, and returns the minimum residual with its
    subset. Ties resolve to the lexicographically smallest subset so results
    do not depend on evaluation order.
    """
    x, y = _validate_bound_inputs(model_layer_outputs, x, y, activations)
    depth = len(activations)
    if not (1 <= degree <= depth - 1):
        raise ValueError(f"degree must be in [1, {depth - 1}], got {degree}")
    best_err = np.inf
    best_combo: tuple[int, ...] | None = None
    for combo in itertools.combinations(range(2, depth + 1), degree):
        err = _walk_combination(
            combo, model_layer_outputs, x, y, activations, use_bias, rcond, x_pinv
        )
        if err < best_err:
            best_err = err
            best_combo = combo
    assert best_combo is not None
    return float(best_err), CheckpointSet(best_combo)


@dataclass
class YesBoundSet:
    """Degree-0 plus the best bound at each requested degree.

    cloud_top is the degree-0 value; cloud_bottom the minimum over all
    computed bounds including degree 0; best_checkpoints the subset
    achieving the bottom (empty when degree 0 wins).
    """

    yes0: float
    yes_k: dict[int, float]
    cloud_top: float
    cloud_bottom: float
    best_checkpoints: CheckpointSet

    def to_dict(self) -> dict:
        return {
            "yes0": self.yes0,
            "yes_k": {str(k): v for k, v in sorted(self.yes_k.items())},
            "cloud_top": self.cloud_top,
            "cloud_bottom": self.cloud_bottom,
            "best_checkpoints": list(self.best_checkpoints.indices),
        }

    @staticmethod
    def from_dict(data: dict) -> "YesBoundSet":
        return YesBoundSet(
            yes0=float(data["yes0"]),
            yes_k={int(k): float(v) for k, v in data["yes_k"].items()},
            cloud_top=float(data["cloud_top"]),
            cloud_bottom=float(data["cloud_bottom"]),
            best_checkpoints=CheckpointSet(tuple(data["best_checkpoints"])),
        )


def yes_bound_set(
    model_layer_outputs: list[Matrix],
    x: Matrix,
    y: Matrix,
    max_degree: int,
    activations: list[ActivationKind],
    use_bias: bool = False,
    rcond: float | None = None,
    monotone: bool = False,
) -> YesBoundSet:
    """Compute the full bound set for one epoch snapshot.

    With monotone=True the per-degree values are post-processed to running
    minima over the degree, so the reported sequence is nonincreasing; the
    raw minimum (and therefore cloud_bottom) is unaffected.
    """
    x, y = _validate_bound_inputs(model_layer_outputs, x, y, activations)
    depth = len(activations)
    if not (0 <= max_degree <= depth - 1):
        raise ValueError(f"max_degree must be in [0, {depth - 1}], got {max_degree}")
    src = augment_ones(x) if use_bias else x
    x_pinv = pinv(src, rcond)
    trace = yes0_trace(x, y, activations, use_bias, rcond, x_pinv=x_pinv)
    yes0 = trace.bound
    raw: dict[int, float] = {}
    argmins: dict[int, CheckpointSet] = {}
    for k in range(1, max_degree + 1):
        raw[k], argmins[k] = yes_k_bound(
            model_layer_outputs, x, y, k, activations, use_bias, rcond, x_pinv
        )
    candidates = [(yes0, CheckpointSet())]
    candidates.extend((raw[k], argmins[k]) for k in sorted(raw))
    cloud_bottom, best = min(candidates, key=lambda c: (c[0], c[1].indices))
    reported = dict(raw)
    if monotone:
        running = np.inf
        for k in sorted(reported):
            running = min(running, reported[k])
            reported[k] = float(running)
    return YesBoundSet(
        yes0=float(yes0),
        yes_k=reported,
        cloud_top=float(yes0),
        cloud_bottom=float(cloud_bottom),
        best_checkpoints=best,
    )


class CloudRegion(enum.Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"


def classify_region(loss: float, bounds: YesBoundSet) -> CloudRegion:
    """Place a loss value relative to the bound cloud.

    Boundary values land in the better region: a loss exactly at the top is
    yellow, exactly at the bottom is green.
    """
    if not np.isfinite(loss) or loss < 0:
        raise ValueError(f"loss must be finite and >= 0, got {loss}")
    if loss > bounds.cloud_top:
        return CloudRegion.RED
    if loss > bounds.cloud_bottom:
        return CloudRegion.YELLOW
    return CloudRegion.GREEN


def guidance_distance(loss: float, bounds: YesBoundSet) -> float:
    """Distance of the loss above the cloud bottom, clamped at zero.

    This scalar is the only certification output allowed to reach the
    training side; bound internals stay behind the barrier.
    """
    if not np.isfinite(loss):
        raise ValueError(f"loss must be finite, got {loss}")
    return max(loss - bounds.cloud_bottom, 0.0)
