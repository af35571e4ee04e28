"""Tensor containers for the fusion pipeline.

All containers are thin wrappers over float64 numpy arrays with shape and
finiteness validation at construction time. They are treated as immutable:
operations return new instances, never mutate in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-6


def _as_float_array(data, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{name}: expected {ndim}-D data, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty data")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: data contains non-finite values")
    return arr


@dataclass(frozen=True)
class Image:
    """Single-channel H x W raster.

    Values are finite reals. Images loaded from 8-bit formats live in [0, 1];
    computed images (reconstructions, fused outputs) may exceed that range and
    are clamped only when written back to an 8-bit format.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_float_array(self.data, "Image", 2))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class CoeffMap:
    """K x H x W coefficient tensor: one spatial activation field per atom."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_float_array(self.data, "CoeffMap", 3))

    @property
    def atoms(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return self.data.shape[1:]

    @classmethod
    def zeros(cls, atoms: int, height: int, width: int) -> "CoeffMap":
        return cls(np.zeros((atoms, height, width)))


@dataclass(frozen=True)
class Dictionary:
    """K convolutional atoms of odd spatial support k x k, each unit l2 norm."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.data, "Dictionary", 3)
        k1, k2 = arr.shape[1], arr.shape[2]
        if k1 != k2:
            raise ValueError(f"Dictionary: atoms must be square, got {k1}x{k2}")
        if k1 % 2 == 0:
            raise ValueError(f"Dictionary: kernel size must be odd, got {k1}")
        norms = np.sqrt((arr * arr).sum(axis=(1, 2)))
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(
                f"Dictionary: atom {worst} has l2 norm {norms[worst]:.8f}, "
                f"expected 1 within {UNIT_NORM_TOL}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def atoms(self) -> int:
        return self.data.shape[0]

    @property
    def kernel(self) -> int:
        return self.data.shape[1]

    @classmethod
    def random_unit(cls, atoms: int, kernel: int, rng: np.random.Generator) -> "Dictionary":
        """Seeded random atoms, each scaled to unit l2 norm."""
        raw = rng.standard_normal((atoms, kernel, kernel))
        norms = np.sqrt((raw * raw).sum(axis=(1, 2), keepdims=True))
        return cls(raw / norms)


@dataclass(frozen=True)
class TransferOp:
    """Atom-mixing operator: per pixel, out = mix @ s + bias.

    `ridge` records the regularization strength the operator was fitted with.
    """

    mix: np.ndarray
    bias: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        mix = _as_float_array(self.mix, "TransferOp.mix", 2)
        if mix.shape[0] != mix.shape[1]:
            raise ValueError(f"TransferOp: mix must be square, got {mix.shape}")
        bias = _as_float_array(self.bias, "TransferOp.bias", 1)
        if bias.shape[0] != mix.shape[0]:
            raise ValueError(
                f"TransferOp: bias length {bias.shape[0]} != mix size {mix.shape[0]}"
            )
        if not np.isfinite(self.ridge) or self.ridge < 0:
            raise ValueError(f"TransferOp: ridge must be >= 0, got {self.ridge}")
        object.__setattr__(self, "mix", mix)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "ridge", float(self.ridge))

    @property
    def atoms(self) -> int:
        return self.mix.shape[0]

    @classmethod
    def identity(cls, atoms: int) -> "TransferOp":
        return cls(np.eye(atoms), np.zeros(atoms), 0.0)


@dataclass(frozen=True)
class FilmParams:
    """Per-atom affine recalibration: channel k maps to gamma[k] * s + beta[k]."""

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        gamma = _as_float_array(self.gamma, "FilmParams.gamma", 1)
        beta = _as_float_array(self.beta, "FilmParams.beta", 1)
        if gamma.shape != beta.shape:
            raise ValueError(
                f"FilmParams: gamma/beta length mismatch {gamma.shape} vs {beta.shape}"
            )
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta", beta)

    @property
    def atoms(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def identity(cls, atoms: int) -> "FilmParams":
        return cls(np.ones(atoms), np.zeros(atoms))
