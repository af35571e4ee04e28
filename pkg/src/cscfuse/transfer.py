"""Visible-guided infrared inference in the coefficient domain.

The visible image is encoded against the frozen shared dictionary, mapped to
pseudo-infrared coefficients by a fitted atom-mixing operator, recalibrated
per atom by an affine (FiLM-style) modulation driven by a pluggable semantic
prior, and reconstructed. No real infrared input is needed at inference time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .containers import CoeffMap, Dictionary, FilmParams, Image, TransferOp
from .solvers import SpectrumCache, StageParams, prox_coeff, reconstruct, solve_coeff_dc
from . import tensorio

WEIGHT_MAP_EPS = 1e-8

CoeffPair = tuple[CoeffMap, CoeffMap]


def encode(img: Image, dct: Dictionary, params: StageParams, iters: int, *,
           cache: SpectrumCache | None = None) -> CoeffMap:
    """Sparse-encode an image with the dictionary held fixed.

    Iterates the coefficient data-consistency solve and the soft threshold
    `iters` times from an all-zero map, using the visible-path weights
    (mu1, lambda1, beta1). `iters=0` returns the all-zero map.
    """
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")
    if cache is None or cache.shape != img.shape:
        cache = SpectrumCache.from_dictionary(dct, img.shape)
    s = CoeffMap.zeros(dct.atoms, *img.shape)
    for _ in range(iters):
        s = solve_coeff_dc(img, dct, s, params.mu1, cache=cache)
        s = prox_coeff(s, params.lambda1, params.beta1)
    return s


def _pooled_moments(pairs: Sequence[CoeffPair]):
    """Second-moment statistics of (vis, ir) coefficient vectors pooled over
    every spatial position of every pair."""
    k = pairs[0][0].atoms
    shape = pairs[0][0].spatial_shape
    sxx = np.zeros((k, k))
    sxy = np.zeros((k, k))
    sx = np.zeros(k)
    sy = np.zeros(k)
    count = 0
    for s_vis, s_ir in pairs:
        if s_vis.atoms != k or s_ir.atoms != k:
            raise ValueError("all coefficient maps must share the atom count")
        if s_vis.spatial_shape != s_ir.spatial_shape:
            raise ValueError("vis/ir coefficient maps must share spatial dims")
        x = s_vis.data.reshape(k, -1)
        y = s_ir.data.reshape(k, -1)
        sxx += x @ x.T
        sxy += x @ y.T
        sx += x.sum(axis=1)
        sy += y.sum(axis=1)
        count += x.shape[1]
    return sxx, sxy, sx, sy, count, shape


def fit_transfer(pairs: Sequence[CoeffPair], ridge: float) -> TransferOp:
    """Fit the atom-mixing operator by ridge regression over pixels.

    Minimizes sum over positions of ||s_ir - M s_vis - b||^2 + ridge*||M||_F^2
    via the normal equations (Cholesky); the intercept b is not penalized.
    """
    if not np.isfinite(ridge) or ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    if len(pairs) == 0:
        raise ValueError("no coefficient pairs to fit")
    sxx, sxy, sx, sy, count, _ = _pooled_moments(pairs)
    k = sx.shape[0]
    if count < k + 1:
        raise ValueError(f"need at least {k + 1} positions, got {count}")
    gram = np.empty((k + 1, k + 1))
    gram[:k, :k] = sxx + ridge * np.eye(k)
    gram[:k, k] = sx
    gram[k, :k] = sx
    gram[k, k] = count
    rhs = np.vstack([sxy, sy])
    try:
        theta = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), rhs)
    except scipy.linalg.LinAlgError as err:
        if ridge == 0:
            raise ValueError(
                "singular normal matrix with ridge=0; refit with ridge > 0"
            ) from err
        raise
    return TransferOp(theta[:k].T, theta[k], ridge)


def apply_transfer(op: TransferOp, s: CoeffMap) -> CoeffMap:
    """Per pixel: out = mix @ s + bias."""
    if s.atoms != op.atoms:
        raise ValueError(f"coefficient atoms {s.atoms} != operator atoms {op.atoms}")
    out = np.einsum("ij,jhw->ihw", op.mix, s.data) + op.bias[:, None, None]
    return CoeffMap(out)


def film_modulate(s: CoeffMap, fp: FilmParams) -> CoeffMap:
    """Per-atom affine recalibration: channel k becomes gamma_k * s_k + beta_k."""
    if s.atoms != fp.atoms:
        raise ValueError(f"coefficient atoms {s.atoms} != film atoms {fp.atoms}")
    return CoeffMap(fp.gamma[:, None, None] * s.data + fp.beta[:, None, None])


def calibrate_film(pairs: Sequence[CoeffPair], op: TransferOp) -> FilmParams:
    """Fit per-atom (gamma, beta) so the modulated-then-transferred visible
    coefficients match the infrared ones.

    The target is the least-squares pre-image pinv(M) @ (s_ir - b); each atom
    then gets an independent scalar affine fit against its visible channel.
    Zero-variance channels fall back to gamma=1 with a mean offset.
    """
    try:
        pre = np.linalg.pinv(op.mix)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"pseudo-inverse of mix failed: {err}") from err
    k = op.atoms
    sx = np.zeros(k)
    sxx = np.zeros(k)
    st = np.zeros(k)
    sxt = np.zeros(k)
    count = 0
    for s_vis, s_ir in pairs:
        if s_vis.atoms != k or s_ir.atoms != k:
            raise ValueError("coefficient atom count must match the operator")
        x = s_vis.data.reshape(k, -1)
        t = pre @ (s_ir.data.reshape(k, -1) - op.bias[:, None])
        sx += x.sum(axis=1)
        sxx += (x * x).sum(axis=1)
        st += t.sum(axis=1)
        sxt += (x * t).sum(axis=1)
        count += x.shape[1]
    if count == 0:
        raise ValueError("no coefficient pairs to calibrate")
    mean_x = sx / count
    mean_t = st / count
    var_x = sxx / count - mean_x**2
    cov_xt = sxt / count - mean_x * mean_t
    degenerate = var_x <= 1e-12 * np.maximum(1.0, sxx / count)
    gamma = np.where(degenerate, 1.0, cov_xt / np.where(degenerate, 1.0, var_x))
    beta = np.where(degenerate, mean_t - mean_x, mean_t - gamma * mean_x)
    return FilmParams(gamma, beta)


@dataclass(frozen=True)
class SemanticProvider:
    """Source of the per-atom FiLM parameters.

    Three backends: `identity` (gamma=1, beta=0), `calibrated` (parameters
    fitted offline by `calibrate_film`), and `file` (an external feature
    vector mapped through two stored affine maps, so a language-model prior
    can be plugged in without code changes).
    """

    kind: str
    film: FilmParams | None = None
    feature: np.ndarray | None = None
    gamma_map: tuple[np.ndarray, np.ndarray] | None = None
    beta_map: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "calibrated", "file"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "calibrated" and self.film is None:
            raise ValueError("calibrated provider requires FilmParams")
        if self.kind == "file":
            if self.feature is None or self.gamma_map is None or self.beta_map is None:
                raise ValueError("file provider requires feature vector and affine maps")

    @classmethod
    def identity(cls) -> "SemanticProvider":
        return cls("identity")

    @classmethod
    def calibrated(cls, film: FilmParams) -> "SemanticProvider":
        return cls("calibrated", film=film)

    @classmethod
    def from_file(cls, path) -> "SemanticProvider":
        """Load a `file` backend payload: five raw rank-2 records holding the
        feature vector f (1 x F), gamma map (K x F and 1 x K), beta map
        (K x F and 1 x K)."""
        records = tensorio.read_records(path)
        if len(records) != 5:
            raise ValueError(f"provider payload must hold 5 records, got {len(records)}")
        f, w_g, c_g, w_b, c_b = (np.asarray(r.data, dtype=np.float64) for r in records)
        feature = f.ravel()
        n_feat = feature.shape[0]
        for name, mat in (("gamma", w_g), ("beta", w_b)):
            if mat.shape[1] != n_feat:
                raise ValueError(f"{name} map expects {mat.shape[1]} features, payload has {n_feat}")
        if c_g.size != w_g.shape[0] or c_b.size != w_b.shape[0]:
            raise ValueError("affine offsets must match their matrix rows")
        return cls("file", feature=feature,
                   gamma_map=(w_g, c_g.ravel()), beta_map=(w_b, c_b.ravel()))

    def to_file(self, path) -> None:
        if self.kind != "file":
            raise ValueError("only the file backend has a payload to write")
        w_g, c_g = self.gamma_map
        w_b, c_b = self.beta_map
        records = [
            Image(self.feature[None, :]),
            Image(w_g), Image(c_g[None, :]),
            Image(w_b), Image(c_b[None, :]),
        ]
        tensorio.write_records(records, path)

    def film_params(self, atoms: int) -> FilmParams:
        if self.kind == "identity":
            return FilmParams.identity(atoms)
        if self.kind == "calibrated":
            if self.film.atoms != atoms:
                raise ValueError(f"calibrated film has {self.film.atoms} atoms, need {atoms}")
            return self.film
        w_g, c_g = self.gamma_map
        w_b, c_b = self.beta_map
        gamma = w_g @ self.feature + c_g
        beta = w_b @ self.feature + c_b
        if gamma.shape[0] != atoms or beta.shape[0] != atoms:
            raise ValueError(f"provider yields {gamma.shape[0]} atoms, need {atoms}")
        return FilmParams(gamma, beta)


def save_film(fp: FilmParams, path) -> None:
    """Store FilmParams as one raw 2 x K record (gamma row, beta row)."""
    tensorio.serialize_tensor(Image(np.vstack([fp.gamma, fp.beta])), path)


def load_film(path) -> FilmParams:
    rec = tensorio.deserialize_tensor(path)
    data = np.asarray(rec.data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] != 2:
        raise ValueError(f"film record must be 2 x K, got {data.shape}")
    return FilmParams(data[0], data[1])


def infer_ir(img_vis: Image, dct: Dictionary, op: TransferOp,
             provider: SemanticProvider, params: StageParams, iters: int, *,
             s_vis: CoeffMap | None = None) -> tuple[Image, CoeffMap, Image]:
    """Infer a pseudo-infrared image from a visible image alone.

    Encodes, transfers to the first-pass coefficients, reconstructs the
    first-pass image, then re-transfers the FiLM-modulated visible
    coefficients for the refined output. Returns (pseudo-IR image, refined
    coefficients, first-pass image); nothing is clamped internally.
    """
    cache = SpectrumCache.from_dictionary(dct, img_vis.shape)
    if s_vis is None:
        s_vis = encode(img_vis, dct, params, iters, cache=cache)
    s0 = apply_transfer(op, s_vis)
    i0 = reconstruct(dct, s0, cache=cache)
    fp = provider.film_params(dct.atoms)
    s1 = apply_transfer(op, film_modulate(s_vis, fp))
    i1 = reconstruct(dct, s1, cache=cache)
    return i1, s1, i0


def forward_gradient(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences with replicate boundary (last row/column zero)."""
    gx = np.zeros_like(arr)
    gy = np.zeros_like(arr)
    gx[:, :-1] = arr[:, 1:] - arr[:, :-1]
    gy[:-1, :] = arr[1:, :] - arr[:-1, :]
    return gx, gy


def gradient_l1(a: np.ndarray, b: np.ndarray) -> float:
    """Mean L1 distance between forward gradients, over both components."""
    gxa, gya = forward_gradient(a)
    gxb, gyb = forward_gradient(b)
    return float(0.5 * (np.abs(gxa - gxb).mean() + np.abs(gya - gyb).mean()))


def weighting_map(i_ir: Image) -> np.ndarray:
    """Normalized intensity weighting of the infrared image.

    (I - min) / (max - min + 1e-8): zero everywhere for a constant image,
    otherwise in [0, 1).
    """
    data = i_ir.data
    lo = data.min()
    return (data - lo) / (data.max() - lo + WEIGHT_MAP_EPS)


def inference_losses(i_p_ir: Image, i_ir: Image, s_p_ir: CoeffMap, s_ir: CoeffMap,
                     i_vis: Image) -> tuple[float, float, float, float]:
    """Consistency, thermal-weighting, and edge losses of a pseudo-IR output.

    Returns (ell_int, ell_reg, ell_grad, ell_inf) where ell_inf is their sum.
    All L1 terms are per-element means so values are resolution-independent.
    """
    if i_p_ir.shape != i_ir.shape or i_p_ir.shape != i_vis.shape:
        raise ValueError("image dims must match")
    if s_p_ir.data.shape != s_ir.data.shape:
        raise ValueError("coefficient dims must match")
    ell_int = float(np.abs(i_p_ir.data - i_ir.data).mean()
                    + np.abs(s_p_ir.data - s_ir.data).mean())
    a_ir = weighting_map(i_ir)
    ell_reg = float(np.abs(a_ir * i_p_ir.data - i_ir.data).mean())
    ell_grad = gradient_l1(i_p_ir.data, i_vis.data)
    return ell_int, ell_reg, ell_grad, ell_int + ell_reg + ell_grad
