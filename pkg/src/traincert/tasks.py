"""Dataset generators for the benchmark tasks.

All generators are seed-deterministic and produce column-sample matrices:
inputs x (n x d) and targets y (m x d). Inverse problems are generated in
the measurement-to-signal direction, i.e. the network learns to recover the
clean signal from its corrupted observation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, as_matrix

# The 1-D denoising noise level is specified as a single number; we read it
# as a variance by default. Flip this (or the per-call flag) to read it as a
# standard deviation instead.
NOISE_PARAM_IS_VARIANCE = True

IMAGE_SIDE = 28
NUM_CLASSES = 10
LABEL_DIM = IMAGE_SIDE * IMAGE_SIDE


@dataclass
class Dataset:
    x: Matrix
    y: Matrix
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = as_matrix(self.x, "inputs")
        self.y = as_matrix(self.y, "targets")
        if self.x.shape[1] != self.y.shape[1]:
            raise ValueError(
                f"inputs have {self.x.shape[1]} columns, targets {self.y.shape[1]}"
            )

    @property
    def num_samples(self) -> int:
        return self.x.shape[1]


def gen_phase_retrieval(n: int = 20, d: int = 1000, seed: int = 0) -> Dataset:
    """Magnitude measurements of random signals through a Gaussian operator.

    One n x n sensing matrix with entries N(0, 1/n) is drawn per dataset;
    signals are standard normal. Inputs are the elementwise absolute
    measurements, targets the signals themselves.
    """
    rng = np.random.default_rng(seed)
    sensing = rng.normal(0.0, np.sqrt(1.0 / n), size=(n, n))
    signals = rng.normal(0.0, 1.0, size=(n, d))
    measurements = np.abs(sensing @ signals)
    return Dataset(
        x=measurements,
        y=signals,
        meta={"task": "phase_retrieval", "n": n, "d": d, "seed": seed},
    )


def gen_denoising(
    n: int = 20,
    num_signals: int = 50,
    noise_per_signal: int = 20,
    noise_param: float = 0.2,
    seed: int = 0,
    noise_is_variance: bool | None = None,
) -> Dataset:
    """Fixed clean signals, each replicated with independent noise draws.

    Targets repeat in blocks of noise_per_signal identical columns; inputs
    add fresh Gaussian noise to every column.
    """
    if noise_is_variance is None:
        noise_is_variance = NOISE_PARAM_IS_VARIANCE
    rng = np.random.default_rng(seed)
    clean = rng.normal(0.0, 1.0, size=(n, num_signals))
    targets = np.repeat(clean, noise_per_signal, axis=1)
    std = np.sqrt(noise_param) if noise_is_variance else noise_param
    noise = rng.normal(0.0, 1.0, size=targets.shape) * std
    return Dataset(
        x=targets + noise,
        y=targets.copy(),
        meta={
            "task": "denoising",
            "n": n,
            "num_signals": num_signals,
            "noise_per_signal": noise_per_signal,
            "noise_param": noise_param,
            "noise_is_variance": noise_is_variance,
            "seed": seed,
        },
    )


@dataclass(frozen=True)
class ImagePatchPlan:
    """How an image is cut into training columns.

    Patches are non-overlapping, taken in row-major order over the patch
    grid, and flattened row-major to length patch_size**2.
    """

    patch_size: int = 8
    sensing_seed: int = 0
    noise_std: float = 0.0
    # "random": dense Gaussian operator with entries N(0, 1/patch_size**2).
    # "blur": separable discrete Gaussian blur acting on the patch.
    operator: str = "random"
    blur_sigma: float = 1.0


def patchify(image: Matrix, patch_size: int) -> Matrix:
    """Split an image into flattened non-overlapping patches, one per column."""
    image = as_matrix(image, "image")
    h, w = image.shape
    if h % patch_size or w % patch_size:
        raise ValueError(
            f"image shape {image.shape} is not divisible by patch size {patch_size}"
        )
    rows = h // patch_size
    cols = w // patch_size
    patches = (
        image.reshape(rows, patch_size, cols, patch_size)
        .transpose(0, 2, 1, 3)
        .reshape(rows * cols, patch_size * patch_size)
    )
    return patches.T.copy()


def depatchify(patches: Matrix, image_shape: tuple[int, int]) -> Matrix:
    """Inverse of patchify for the same image shape."""
    patches = as_matrix(patches, "patches")
    h, w = image_shape
    patch_size = int(round(np.sqrt(patches.shape[0])))
    if patch_size * patch_size != patches.shape[0]:
        raise ValueError(f"patch length {patches.shape[0]} is not a square")
    rows = h // patch_size
    cols = w // patch_size
    if rows * cols != patches.shape[1]:
        raise ValueError(
            f"{patches.shape[1]} patches do not tile an image of shape {image_shape}"
        )
    return (
        patches.T.reshape(rows, cols, patch_size, patch_size)
        .transpose(0, 2, 1, 3)
        .reshape(h, w)
        .copy()
    )


def _blur_matrix_1d(size: int, sigma: float) -> Matrix:
    idx = np.arange(size)
    diff = idx[:, None] - idx[None, :]
    kernel = np.exp(-0.5 * (diff / sigma) ** 2)
    return kernel / kernel.sum(axis=1, keepdims=True)


def sensing_operator(plan: ImagePatchPlan) -> Matrix:
    dim = plan.patch_size * plan.patch_size
    if plan.operator == "random":
        rng = np.random.default_rng(plan.sensing_seed)
        return rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, dim))
    if plan.operator == "blur":
        b = _blur_matrix_1d(plan.patch_size, plan.blur_sigma)
        return np.kron(b, b)
    raise ValueError(f"unknown operator kind {plan.operator!r}")


def gen_quadratic_image(image: Matrix, plan: ImagePatchPlan, seed: int = 0) -> Dataset:
    """Squared-magnitude measurements of image patches plus additive noise.

    Each patch is observed as (operator @ patch)**2 elementwise plus
    Gaussian noise; the network learns to invert the corruption.
    """
    patches = patchify(image, plan.patch_size)
    op = sensing_operator(plan)
    measurements = (op @ patches) ** 2
    if plan.noise_std > 0:
        rng = np.random.default_rng(seed)
        measurements = measurements + rng.normal(
            0.0, plan.noise_std, size=measurements.shape
        )
    return Dataset(
        x=measurements,
        y=patches,
        meta={
            "task": "quadratic_image",
            "image_shape": list(image.shape),
            "patch_size": plan.patch_size,
            "operator": plan.operator,
            "noise_std": plan.noise_std,
            "sensing_seed": plan.sensing_seed,
            "seed": seed,
        },
    )


def encode_label(digit: int) -> np.ndarray:
    """Flattened 28x28 zero image with a single 1 on the diagonal cell
    (digit, digit)."""
    if not (0 <= digit <= 9):
        raise ValueError(f"digit must be in 0..9, got {digit}")
    vec = np.zeros(LABEL_DIM)
    vec[digit * IMAGE_SIDE + digit] = 1.0
    return vec


def decode_label(output: np.ndarray) -> int:
    """Largest diagonal response wins; ties break toward the smaller digit."""
    output = np.asarray(output, dtype=np.float64).reshape(-1)
    if output.shape[0] != LABEL_DIM:
        raise ValueError(f"expected length {LABEL_DIM}, got {output.shape[0]}")
    diag = output[[j * IMAGE_SIDE + j for j in range(NUM_CLASSES)]]
    return int(np.argmax(diag))


def success_rate(outputs: Matrix, labels: np.ndarray) -> float:
    """Fraction of columns whose decoded digit matches the label."""
    outputs = as_matrix(outputs, "outputs")
    labels = np.asarray(labels)
    if outputs.shape[1] != labels.shape[0]:
        raise ValueError(
            f"{outputs.shape[1]} outputs vs {labels.shape[0]} labels"
        )
    hits = sum(
        decode_label(outputs[:, i]) == int(labels[i]) for i in range(labels.shape[0])
    )
    return hits / labels.shape[0]


def gen_synthetic_digits(
    n_features: int = 20,
    count: int = 100,
    noise_std: float = 0.3,
    seed: int = 0,
) -> Dataset:
    """Small classification stand-in with diagonal-encoded targets.

    Each class has a fixed Gaussian prototype feature vector; samples are
    noisy copies cycling through the classes. Targets use the same diagonal
    encoding as the real digit task, so decode_label applies unchanged.
    Keeping n_features well below count leaves the inputs rank-deficient
    relative to the sample count, which keeps the certification bounds
    nondegenerate.
    """
    rng = np.random.default_rng(seed)
    prototypes = rng.normal(0.0, 1.0, size=(n_features, NUM_CLASSES))
    labels = np.arange(count) % NUM_CLASSES
    x = prototypes[:, labels] + rng.normal(0.0, noise_std, size=(n_features, count))
    encodings = np.stack([encode_label(c) for c in range(NUM_CLASSES)], axis=1)
    y = encodings[:, labels]
    return Dataset(
        x=x,
        y=y,
        meta={
            "task": "synthetic_digits",
            "n_features": n_features,
            "count": count,
            "noise_std": noise_std,
            "seed": seed,
            "labels": labels.tolist(),
        },
    )
