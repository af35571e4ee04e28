"""Planted synthetic instances for validation and demos.

Generates image pairs that are exactly representable by a known dictionary
and sparse coefficients, plus two-modality instances where the infrared image
is a known atom-mixing of the encoded visible coefficients. Every generator
is fully seeded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .containers import CoeffMap, Dictionary, Image, TransferOp
from .solvers import StageParams, reconstruct
from .transfer import apply_transfer, encode


def nonneg_dictionary(atoms: int, kernel: int, rng: np.random.Generator) -> Dictionary:
    """Random nonnegative unit-norm atoms, so planted images stay in [0, 1]."""
    raw = np.abs(rng.standard_normal((atoms, kernel, kernel)))
    norms = np.sqrt((raw * raw).sum(axis=(1, 2), keepdims=True))
    return Dictionary(raw / norms)


def sparse_coeffs(atoms: int, shape: tuple[int, int], density: float,
                  rng: np.random.Generator, amplitude: tuple[float, float] = (0.5, 1.5),
                  ) -> CoeffMap:
    """Bernoulli support at the given density with uniform positive amplitudes."""
    mask = rng.random((atoms, *shape)) < density
    amps = rng.uniform(*amplitude, size=(atoms, *shape))
    return CoeffMap(np.where(mask, amps, 0.0))


@dataclass(frozen=True)
class PlantedSet:
    """Training pairs exactly representable by `dictionary`."""

    dictionary: Dictionary
    pairs: tuple[tuple[Image, Image], ...]
    coeffs: tuple[tuple[CoeffMap, CoeffMap], ...]


def planted_pairs(seed: int, *, atoms: int = 4, kernel: int = 5,
                  shape: tuple[int, int] = (32, 32), n_pairs: int = 8,
                  density: float = 0.05) -> PlantedSet:
    """Visible/infrared pairs synthesized from one shared dictionary.

    Images are scaled by the set-wide peak so all values lie in [0, 1]; the
    returned coefficients carry the same scaling and reconstruct the images
    exactly.
    """
    rng = np.random.default_rng(seed)
    dct = nonneg_dictionary(atoms, kernel, rng)
    raw_coeffs = []
    peak = 0.0
    for _ in range(n_pairs):
        sv = sparse_coeffs(atoms, shape, density, rng)
        si = sparse_coeffs(atoms, shape, density, rng)
        raw_coeffs.append((sv, si))
        for s in (sv, si):
            peak = max(peak, float(np.abs(reconstruct(dct, s).data).max()))
    scale = 1.0 / max(peak, 1e-12)
    pairs = []
    coeffs = []
    for sv, si in raw_coeffs:
        sv = CoeffMap(sv.data * scale)
        si = CoeffMap(si.data * scale)
        coeffs.append((sv, si))
        pairs.append((reconstruct(dct, sv), reconstruct(dct, si)))
    return PlantedSet(dct, tuple(pairs), tuple(coeffs))


@dataclass(frozen=True)
class FusionInstance:
    """A visible image whose infrared counterpart is a planted atom mixing of
    its encoded coefficients."""

    dictionary: Dictionary
    mixing: TransferOp
    i_vis: Image
    i_ir: Image
    s_vis: CoeffMap
    s_ir: CoeffMap
    params: StageParams
    encode_iters: int


def fusion_instance(seed: int, *, atoms: int = 6, kernel: int = 5,
                    shape: tuple[int, int] = (32, 32), density: float = 0.04,
                    encode_iters: int = 30) -> FusionInstance:
    """Two-modality instance with a known VIS-to-IR coefficient mixing.

    The infrared image is reconstruct(M* @ encode(I_vis)), with M* a mild
    diagonal-dominant mixing that amplifies some atoms, so the infrared
    carries intensity peaks above the visible in places.
    """
    rng = np.random.default_rng(seed)
    dct = nonneg_dictionary(atoms, kernel, rng)
    planted = sparse_coeffs(atoms, shape, density, rng)
    peak = float(np.abs(reconstruct(dct, planted).data).max())
    planted = CoeffMap(planted.data / max(peak, 1e-12) * 0.7)
    i_vis = reconstruct(dct, planted)

    gains = rng.uniform(0.6, 1.6, size=atoms)
    mix = np.diag(gains) + rng.uniform(0.0, 0.05, size=(atoms, atoms))
    mixing = TransferOp(mix, np.zeros(atoms))

    params = StageParams(mu1=0.01, mu2=0.01, mu3=0.01, lambda1=1e-5, lambda2=1e-5)
    s_vis = encode(i_vis, dct, params, encode_iters)
    s_ir = apply_transfer(mixing, s_vis)
    i_ir = reconstruct(dct, s_ir)
    return FusionInstance(dct, mixing, i_vis, i_ir, s_vis, s_ir, params, encode_iters)
