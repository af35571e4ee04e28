"""Joint shared-dictionary learning over paired visible/infrared images.

One unfolding block updates the visible coefficients, the infrared
coefficients, and then the shared dictionary, each as a closed-form
data-consistency solve followed by an analytic proximal update. Training
sweeps repeat the block with coefficients warm-started; the dictionary update
aggregates the per-frequency normal equations over all pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .containers import CoeffMap, Dictionary, Image
from .solvers import (
    SpectrumCache,
    StageSchedule,
    prox_coeff,
    prox_dict,
    reconstruct,
    solve_coeff_dc,
    solve_dict_dc_batch,
)

Pair = tuple[Image, Image]
CoeffPair = tuple[CoeffMap, CoeffMap]


@dataclass(frozen=True)
class JsrlConfig:
    """Dictionary-learning configuration.

    `init=None` draws seeded random unit-norm atoms; passing a Dictionary
    resumes from it. `outer_iters=0` with a provided init is a no-op.
    """

    schedule: StageSchedule
    atoms: int = 32
    kernel: int = 5
    inner_blocks: int = 1
    outer_iters: int = 20
    seed: int = 0
    init: Dictionary | None = None

    def __post_init__(self):
        if self.atoms < 1:
            raise ValueError(f"atoms must be >= 1, got {self.atoms}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd and positive, got {self.kernel}")
        if self.inner_blocks < 1:
            raise ValueError(f"inner_blocks must be >= 1, got {self.inner_blocks}")
        if self.outer_iters < 0:
            raise ValueError(f"outer_iters must be >= 0, got {self.outer_iters}")
        if self.init is not None:
            if self.init.atoms != self.atoms or self.init.kernel != self.kernel:
                raise ValueError(
                    f"init dictionary is {self.init.atoms} atoms of {self.init.kernel}x"
                    f"{self.init.kernel}, config wants {self.atoms} of {self.kernel}x{self.kernel}"
                )


@dataclass(frozen=True)
class TrainState:
    """Current dictionary, per-pair coefficient maps, and loss history.

    Each history entry is (ell_S, ell_D): per-pixel mean L1 reconstruction
    residuals of both modalities summed, evaluated with the pre-update and
    post-update dictionary respectively.
    """

    dictionary: Dictionary
    coeffs: tuple[CoeffPair, ...]
    history: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    @classmethod
    def initial(cls, dictionary: Dictionary, pairs: Sequence[Pair]) -> "TrainState":
        k = dictionary.atoms
        coeffs = tuple(
            (CoeffMap.zeros(k, *vis.shape), CoeffMap.zeros(k, *ir.shape))
            for vis, ir in pairs
        )
        return cls(dictionary, coeffs)


def _recon_l1(dct: Dictionary, coeffs: CoeffMap, img: Image, cache: SpectrumCache) -> float:
    approx = reconstruct(dct, coeffs, cache=cache)
    return float(np.abs(approx.data - img.data).mean())


def _block_update(pairs, coeffs, dct, params):
    """One unfolding block over all pairs: coefficient solves per pair, then
    a single aggregated dictionary update. Returns (dict, coeffs, ell_S, ell_D)."""
    shape = pairs[0][0].shape
    cache = SpectrumCache.from_dictionary(dct, shape)
    new_coeffs = []
    for (i_vis, i_ir), (s_vis, s_ir) in zip(pairs, coeffs):
        sv = prox_coeff(
            solve_coeff_dc(i_vis, dct, s_vis, params.mu1, cache=cache),
            params.lambda1, params.beta1,
        )
        si = prox_coeff(
            solve_coeff_dc(i_ir, dct, s_ir, params.mu2, cache=cache),
            params.lambda2, params.beta2,
        )
        new_coeffs.append((sv, si))

    ell_s = np.mean([
        _recon_l1(dct, sv, iv, cache) + _recon_l1(dct, si, ii, cache)
        for (iv, ii), (sv, si) in zip(pairs, new_coeffs)
    ])

    images = [img for pair in pairs for img in pair]
    flat = [cm for pair_coeffs in new_coeffs for cm in pair_coeffs]
    d_raw = solve_dict_dc_batch(images, flat, dct, params.mu3)
    new_dct = prox_dict(d_raw, dct.kernel)

    new_cache = SpectrumCache.from_dictionary(new_dct, shape)
    ell_d = np.mean([
        _recon_l1(new_dct, sv, iv, new_cache) + _recon_l1(new_dct, si, ii, new_cache)
        for (iv, ii), (sv, si) in zip(pairs, new_coeffs)
    ])
    return new_dct, tuple(new_coeffs), float(ell_s), float(ell_d)


def ivdlb_step(pair: Pair, state: TrainState, params) -> TrainState:
    """One unfolding block on a single image pair.

    Runs the visible and infrared coefficient solves (data consistency +
    soft threshold), then the dictionary solve (data consistency + support
    projection and normalization), and appends the (ell_S, ell_D) residuals.
    """
    if len(state.coeffs) != 1:
        raise ValueError("ivdlb_step expects a state tracking exactly one pair")
    dct, coeffs, ell_s, ell_d = _block_update([pair], state.coeffs, state.dictionary, params)
    return replace(
        state,
        dictionary=dct,
        coeffs=coeffs,
        history=state.history + ((ell_s, ell_d),),
    )


def learn_dictionary(
    pairs: Sequence[Pair],
    cfg: JsrlConfig,
    on_sweep: Callable[[int, Dictionary, tuple[float, float]], None] | None = None,
) -> tuple[Dictionary, list[tuple[float, float]]]:
    """Run dictionary-learning sweeps over the training pairs.

    Each sweep applies `inner_blocks` unfolding blocks; coefficients are
    warm-started across sweeps from all-zero initial maps, and the dictionary
    update aggregates all pairs. Returns the final dictionary and one
    (ell_S, ell_D) residual entry per sweep (mean over the sweep's blocks).
    Identical config and inputs reproduce the result bitwise.
    """
    if len(pairs) == 0:
        raise ValueError("empty training set")
    shape = pairs[0][0].shape
    for vis, ir in pairs:
        if vis.shape != shape or ir.shape != shape:
            raise ValueError("all training pairs must share dimensions")

    if cfg.init is not None:
        dct = cfg.init
    else:
        rng = np.random.default_rng(cfg.seed)
        dct = Dictionary.random_unit(cfg.atoms, cfg.kernel, rng)

    coeffs = TrainState.initial(dct, pairs).coeffs
    history: list[tuple[float, float]] = []
    for sweep in range(cfg.outer_iters):
        block_losses = []
        for n in range(1, cfg.inner_blocks + 1):
            dct, coeffs, ell_s, ell_d = _block_update(pairs, coeffs, dct, cfg.schedule.at(n))
            block_losses.append((ell_s, ell_d))
        entry = tuple(np.mean(block_losses, axis=0))
        history.append(entry)
        if on_sweep is not None:
            on_sweep(sweep, dct, entry)
    return dct, history
