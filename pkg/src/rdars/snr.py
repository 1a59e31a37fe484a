"""Instantaneous SNR and MRC rate for a channel realization and RDARS configuration.

All functions broadcast over the leading batch axes of a ChannelRealization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rdars.channel import ChannelRealization
from rdars.config import RdarsConfiguration, effective_reflection


@dataclass(frozen=True)
class NoiseModel:
    sigma_b_sq: float
    sigma_r_sq: float

    def __post_init__(self):
        if not (self.sigma_b_sq > 0 and self.sigma_r_sq > 0):
            raise ValueError("noise powers must be positive")


@dataclass(frozen=True)
class SnrBreakdown:
    total: np.ndarray
    reflection_gain: np.ndarray
    distribution_gain: np.ndarray


def _reflected(real: ChannelRealization, b: np.ndarray) -> np.ndarray:
    # H B h for diagonal B, shape (..., L)
    return np.einsum("...ln,...n->...l", real.h_rdars_bs, b * real.h_ue_rdars)


def received_snr_siso(real: ChannelRealization, config: RdarsConfiguration,
                      transmit_snr: float) -> SnrBreakdown:
    """Single-antenna BS with equal noise at BS and connected elements.

    ``total = snr * (|h_UB + h_RB^H B h_UR|^2 + h_UR^H A^H A h_UR)``.
    """
    if real.n_bs != 1:
        raise ValueError(f"single-antenna SNR needs L=1, got L={real.n_bs}")
    b = effective_reflection(config)
    composite = real.h_ue_bs[..., 0] + _reflected(real, b)[..., 0]
    refl = np.abs(composite) ** 2
    dist = np.sum(np.abs(real.h_ue_rdars[..., config.connected_mask]) ** 2, axis=-1)
    return SnrBreakdown(transmit_snr * (refl + dist), refl, dist)


def reflection_gain_aligned(real: ChannelRealization, config: RdarsConfiguration) -> np.ndarray:
    """Reflection gain under co-phasing: ``(|h_UB| + sum_reflecting |h_RB,i||h_UR,i|)^2``.

    Independent of the stored phases; equals the ``received_snr_siso``
    reflection gain only when the phases follow ``optimal_phases_instantaneous``.
    """
    if real.n_bs != 1:
        raise ValueError(f"single-antenna SNR needs L=1, got L={real.n_bs}")
    keep = ~config.connected_mask
    x = np.abs(real.h_rdars_bs[..., 0, keep]) * np.abs(real.h_ue_rdars[..., keep])
    return (np.abs(real.h_ue_bs[..., 0]) + np.sum(x, axis=-1)) ** 2


def composite_channel_simo(real: ChannelRealization, config: RdarsConfiguration) -> np.ndarray:
    """Stacked channel ``[H B h + d ; A h]`` of length ``L + a``."""
    b = effective_reflection(config)
    top = _reflected(real, b) + real.h_ue_bs
    bottom = real.h_ue_rdars[..., config.connected_indices]
    return np.concatenate([top, bottom], axis=-1)


def mrc_snr_simo(h_tilde: np.ndarray, p: float, noise: NoiseModel, a: int) -> np.ndarray:
    """Post-MRC SNR ``P ||h||^4 / (h^H R h)``, 0 where ``h`` vanishes."""
    h_tilde = np.asarray(h_tilde)
    n_top = h_tilde.shape[-1] - a
    if n_top < 0:
        raise ValueError("composite channel shorter than the connected count")
    pw = np.abs(h_tilde) ** 2
    top = np.sum(pw[..., :n_top], axis=-1)
    bottom = np.sum(pw[..., n_top:], axis=-1)
    norm_sq = top + bottom
    denom = noise.sigma_b_sq * top + noise.sigma_r_sq * bottom
    with np.errstate(invalid="ignore", divide="ignore"):
        snr = np.where(denom > 0, p * norm_sq * norm_sq / np.where(denom > 0, denom, 1.0), 0.0)
    return snr


def mrc_rate_simo(h_tilde: np.ndarray, p: float, noise: NoiseModel, a: int) -> np.ndarray:
    """Instantaneous MRC rate in bps/Hz."""
    return np.log1p(mrc_snr_simo(h_tilde, p, noise, a)) / np.log(2.0)
