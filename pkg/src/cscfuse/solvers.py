"""Frequency-domain quadratic solvers and analytic proximal operators.

All convolutions are circular, so the data-consistency subproblems decouple
per frequency after a 2-D FFT. Atoms are zero-padded with their (0, 0) entry
at image position (0, 0); `prox_dict` crops the same corner, so padding and
cropping are exact inverses.

The coefficient solve uses the rank-one Sherman-Morrison inverse; a
per-frequency Cholesky path is kept as an internal cross-check. The
dictionary solve factors a K x K Hermitian positive-definite system per
frequency by Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .containers import CoeffMap, Dictionary, Image, UNIT_NORM_TOL


@dataclass(frozen=True)
class StageParams:
    """Per-stage weights: quadratic couplings (mu), proximal weights (beta),
    prior weights (lambda). Soft-threshold levels are lambda/beta."""

    mu1: float
    mu2: float
    mu3: float
    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 1.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0

    def __post_init__(self):
        for name in ("mu1", "mu2", "mu3", "beta1", "beta2", "beta3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"StageParams.{name} must be > 0, got {v}")
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"StageParams.{name} must be >= 0, got {v}")


@dataclass(frozen=True)
class StageSchedule:
    """Maps a stage index to StageParams.

    Constant by default; `growth` scales the mu and beta weights geometrically
    per stage (a configurable stand-in for learned stage-wise hyperparameters).
    """

    base: StageParams
    growth: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.growth) or self.growth <= 0:
            raise ValueError(f"StageSchedule.growth must be > 0, got {self.growth}")

    def at(self, stage: int) -> StageParams:
        """Parameters for stage n >= 1."""
        if stage < 1:
            raise ValueError(f"stage index must be >= 1, got {stage}")
        if self.growth == 1.0:
            return self.base
        g = self.growth ** (stage - 1)
        b = self.base
        return StageParams(
            mu1=b.mu1 * g, mu2=b.mu2 * g, mu3=b.mu3 * g,
            beta1=b.beta1 * g, beta2=b.beta2 * g, beta3=b.beta3 * g,
            lambda1=b.lambda1, lambda2=b.lambda2, lambda3=b.lambda3,
        )


def pad_atoms(atoms: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad K x k x k atoms to K x H x W, top-left anchored."""
    k = atoms.shape[1]
    h, w = shape
    if k > h or k > w:
        raise ValueError(f"kernel {k} exceeds spatial dims {shape}")
    out = np.zeros((atoms.shape[0], h, w))
    out[:, :k, :k] = atoms
    return out


@dataclass(frozen=True)
class SpectrumCache:
    """FFTs of the zero-padded atoms plus their summed spectral energy,
    precomputed once per (dictionary, image shape) pair."""

    atom_spectra: np.ndarray  # K x H x (W//2+1), complex
    energy: np.ndarray        # H x (W//2+1), sum_k |D_k|^2
    shape: tuple[int, int]

    @classmethod
    def from_dictionary(cls, dct: Dictionary, shape: tuple[int, int]) -> "SpectrumCache":
        spectra = np.fft.rfft2(pad_atoms(dct.data, shape))
        energy = (spectra.real**2 + spectra.imag**2).sum(axis=0)
        return cls(spectra, energy, tuple(shape))


def _check_coeff_dims(img: Image, dct: Dictionary, s_prev: CoeffMap) -> None:
    if s_prev.atoms != dct.atoms:
        raise ValueError(f"coefficient atoms {s_prev.atoms} != dictionary atoms {dct.atoms}")
    if s_prev.spatial_shape != img.shape:
        raise ValueError(f"coefficient dims {s_prev.spatial_shape} != image dims {img.shape}")


def _hermitian_cholesky_solve(vectors: Sequence[np.ndarray], mu: float,
                              rhs: np.ndarray) -> np.ndarray:
    """Solve (sum_m conj(v_m) v_m^T + mu I) x = rhs independently per frequency.

    Each v_m and rhs are K x H x Wf arrays over the half spectrum. The system
    matrix is Hermitian positive definite for mu > 0; it is assembled and
    factored in row blocks to bound the K*K working set.
    """
    n_atoms, h, wf = rhs.shape
    out = np.empty_like(rhs)
    ridge = mu * np.eye(n_atoms)
    block = max(1, int(4_000_000 / max(1, wf * n_atoms * n_atoms)))
    for r0 in range(0, h, block):
        rows = slice(r0, min(r0 + block, h))
        a = np.zeros((rows.stop - rows.start, wf, n_atoms, n_atoms), dtype=complex)
        for v in vectors:
            vt = v[:, rows].transpose(1, 2, 0)
            a += vt.conj()[..., :, None] * vt[..., None, :]
        a += ridge
        lower = np.linalg.cholesky(a)
        b = rhs[:, rows].transpose(1, 2, 0)[..., None]
        y = np.linalg.solve(lower, b)
        x = np.linalg.solve(np.conj(np.swapaxes(lower, -1, -2)), y)
        out[:, rows] = x[..., 0].transpose(2, 0, 1)
    return out


def solve_coeff_dc(img: Image, dct: Dictionary, s_prev: CoeffMap, mu: float, *,
                   cache: SpectrumCache | None = None,
                   method: str = "sherman_morrison") -> CoeffMap:
    """Exact minimizer of 0.5*||I - D*S||^2 + (mu/2)*||S - S_prev||^2.

    Per frequency the normal equations are rank-one plus mu*I, inverted in
    closed form by Sherman-Morrison. `method="cholesky"` solves the same K x K
    systems by factorization instead (cross-check path).
    """
    if not np.isfinite(mu) or mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    _check_coeff_dims(img, dct, s_prev)
    if cache is None or cache.shape != img.shape:
        cache = SpectrumCache.from_dictionary(dct, img.shape)
    dhat = cache.atom_spectra
    ihat = np.fft.rfft2(img.data)
    b = dhat.conj() * ihat + mu * np.fft.rfft2(s_prev.data)
    if method == "sherman_morrison":
        correlation = (dhat * b).sum(axis=0)
        shat = (b - dhat.conj() * (correlation / (mu + cache.energy))) / mu
    elif method == "cholesky":
        shat = _hermitian_cholesky_solve([dhat], mu, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CoeffMap(np.fft.irfft2(shat, s=img.shape))


def prox_coeff(s_dc: CoeffMap, lam: float, beta: float) -> CoeffMap:
    """Elementwise soft threshold at lambda/beta: the exact minimizer of
    (beta/2)*(x - x0)^2 + lambda*|x| per element."""
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    t = lam / beta
    x = s_dc.data
    return CoeffMap(np.sign(x) * np.maximum(np.abs(x) - t, 0.0))


def solve_dict_dc_batch(images: Sequence[Image], coeffs: Sequence[CoeffMap],
                        d_prev: Dictionary, mu3: float) -> np.ndarray:
    """Dictionary data-consistency solve aggregated over (image, coeff) terms.

    Minimizes sum_i 0.5*||I_i - D'*S_i||^2 + (mu3/2)*||D_prev - D'||^2 over an
    unconstrained K x H x W filter tensor. Per frequency this is a K x K
    Hermitian positive-definite system solved by Cholesky.
    """
    if not np.isfinite(mu3) or mu3 <= 0:
        raise ValueError(f"mu3 must be > 0, got {mu3}")
    if len(images) == 0 or len(images) != len(coeffs):
        raise ValueError("images and coeffs must be equal-length, non-empty")
    shape = images[0].shape
    for img, s in zip(images, coeffs):
        if img.shape != shape or s.spatial_shape != shape:
            raise ValueError("all images and coefficient maps must share spatial dims")
        if s.atoms != d_prev.atoms:
            raise ValueError(f"coefficient atoms {s.atoms} != dictionary atoms {d_prev.atoms}")
    dhat_prev = np.fft.rfft2(pad_atoms(d_prev.data, shape))
    rhs = mu3 * dhat_prev
    spectra = []
    for img, s in zip(images, coeffs):
        shat = np.fft.rfft2(s.data)
        spectra.append(shat)
        rhs = rhs + shat.conj() * np.fft.rfft2(img.data)
    dhat = _hermitian_cholesky_solve(spectra, mu3, rhs)
    return np.fft.irfft2(dhat, s=shape)


def solve_dict_dc(i_vis: Image, i_ir: Image, s_vis: CoeffMap, s_ir: CoeffMap,
                  d_prev: Dictionary, mu3: float) -> np.ndarray:
    """Single-pair dictionary data-consistency solve (both modalities).

    Returns the unconstrained K x H x W spatial tensor, to be projected by
    `prox_dict`.
    """
    return solve_dict_dc_batch([i_vis, i_ir], [s_vis, s_ir], d_prev, mu3)


def prox_dict(d_raw: np.ndarray, kernel: int) -> Dictionary:
    """Project a K x H x W tensor onto the dictionary constraint set.

    Crops each atom to its k x k support (top-left anchored) and rescales to
    unit l2 norm. Atoms already unit-norm within tolerance are left untouched
    so the projection is bitwise idempotent. An all-zero atom becomes a unit
    impulse at the kernel center.
    """
    d_raw = np.asarray(d_raw, dtype=np.float64)
    if d_raw.ndim != 3:
        raise ValueError(f"expected K x H x W tensor, got shape {d_raw.shape}")
    if kernel % 2 == 0 or kernel < 1:
        raise ValueError(f"kernel size must be odd and positive, got {kernel}")
    if kernel > min(d_raw.shape[1], d_raw.shape[2]):
        raise ValueError(f"kernel {kernel} exceeds tensor dims {d_raw.shape[1:]}")
    atoms = d_raw[:, :kernel, :kernel].copy()
    norms = np.sqrt((atoms * atoms).sum(axis=(1, 2)))
    center = kernel // 2
    for i, n in enumerate(norms):
        if n == 0.0:
            atoms[i] = 0.0
            atoms[i, center, center] = 1.0
        elif abs(n - 1.0) > UNIT_NORM_TOL:
            atoms[i] /= n
    return Dictionary(atoms)


def reconstruct(dct: Dictionary, coeffs: CoeffMap, *,
                cache: SpectrumCache | None = None) -> Image:
    """Circular convolution sum over atoms: I = sum_k D_k * S_k."""
    if coeffs.atoms != dct.atoms:
        raise ValueError(f"coefficient atoms {coeffs.atoms} != dictionary atoms {dct.atoms}")
    shape = coeffs.spatial_shape
    if cache is None or cache.shape != shape:
        cache = SpectrumCache.from_dictionary(dct, shape)
    ihat = (cache.atom_spectra * np.fft.rfft2(coeffs.data)).sum(axis=0)
    return Image(np.fft.irfft2(ihat, s=shape))
