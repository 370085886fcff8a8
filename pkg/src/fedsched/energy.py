"""Wireless transmit and local compute energy for one scheduling round.

Transmit energy inverts the achievable-rate relation r = B*ln(1 + g*P/N0)
at the target rate R, so a UE transmits for exactly J/R seconds at the
minimum power that sustains R. No power cap is applied: poor channels yield
correspondingly large energies and are reported as computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization, UeProfile

# exp(R/B) overflows float64 well before this; treat larger ratios as a
# configuration problem instead of silently returning inf.
MAX_RATE_BANDWIDTH_RATIO = 700.0


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-UE energy components for one round, all in joules."""

    transmit_j: np.ndarray
    compute_j: np.ndarray
    per_ue_total_j: np.ndarray


def data_rate(power_w: float, gain: float, bandwidth_hz: float, noise_w: float,
              log_base: float = math.e) -> float:
    """Achievable rate in bit/s for a given transmit power.

    The default uses the natural logarithm; pass ``log_base=2`` for the
    conventional Shannon form.
    """
    if power_w < 0:
        raise ValueError("power_w must be >= 0")
    if gain <= 0:
        raise ValueError("gain must be > 0")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be > 0")
    if noise_w <= 0:
        raise ValueError("noise_w must be > 0")
    if log_base <= 1:
        raise ValueError("log_base must be > 1")
    rate = bandwidth_hz * math.log1p(gain * power_w / noise_w)
    if log_base != math.e:
        rate /= math.log(log_base)
    return rate


def transmit_energy(model_size_bits: float, rate_threshold_bps: float, gain: float,
                    bandwidth_hz: float, noise_w: float,
                    log_base: float = math.e) -> float:
    """Energy in joules to upload the model at exactly the threshold rate.

    E = (J/R) * (N0/g) * (base**(R/B) - 1), the inverse of :func:`data_rate`.
    """
    if model_size_bits <= 0:
        raise ValueError("model_size_bits must be > 0")
    if rate_threshold_bps <= 0:
        raise ValueError("rate_threshold_bps must be > 0")
    if gain <= 0:
        raise ValueError("gain must be > 0")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be > 0")
    if noise_w <= 0:
        raise ValueError("noise_w must be > 0")
    if log_base <= 1:
        raise ValueError("log_base must be > 1")
    ratio = rate_threshold_bps / bandwidth_hz
    if log_base != math.e:
        ratio *= math.log(log_base)
    if ratio > MAX_RATE_BANDWIDTH_RATIO:
        raise OverflowError(
            f"rate/bandwidth ratio {ratio:.3g} exceeds {MAX_RATE_BANDWIDTH_RATIO:g}; "
            "required power is not representable"
        )
    duration_s = model_size_bits / rate_threshold_bps
    power_w = (noise_w / gain) * math.expm1(ratio)
    return duration_s * power_w


def compute_energy(profile: UeProfile) -> float:
    """Local training energy: (capacitance/2) * cycles * data_bits * f**2."""
    if profile.data_size_bits <= 0:
        raise ValueError("data_size_bits must be > 0")
    if profile.cycles_per_bit <= 0 or profile.cpu_freq_hz <= 0 or profile.capacitance <= 0:
        raise ValueError("cycles_per_bit, cpu_freq_hz and capacitance must be > 0")
    cycles = profile.cycles_per_bit * profile.data_size_bits
    return 0.5 * profile.capacitance * cycles * profile.cpu_freq_hz**2


def round_breakdown(profiles: list[UeProfile], channels: ChannelRealization,
                    model_size_bits: float, kappa: int = 1) -> EnergyBreakdown:
    """Vectorized per-UE energies for one round.

    ``per_ue_total_j[k]`` is what UE k would spend if scheduled: one upload
    plus ``kappa`` local passes.
    """
    k = len(profiles)
    if channels.gains.shape != (k,):
        raise ValueError("channel gains length does not match the population")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    gains = np.asarray(channels.gains, dtype=float)
    if np.any(gains <= 0):
        raise ValueError("gain must be > 0")
    ratio = channels.rate_threshold_bps / channels.subchannel_bandwidth_hz
    if ratio > MAX_RATE_BANDWIDTH_RATIO:
        raise OverflowError(
            f"rate/bandwidth ratio {ratio:.3g} exceeds {MAX_RATE_BANDWIDTH_RATIO:g}; "
            "required power is not representable"
        )
    duration_s = model_size_bits / channels.rate_threshold_bps
    transmit = duration_s * (channels.noise_w / gains) * math.expm1(ratio)
    bits = np.array([p.data_size_bits for p in profiles], dtype=float)
    cycles = np.array([p.cycles_per_bit for p in profiles], dtype=float) * bits
    freq2 = np.array([p.cpu_freq_hz for p in profiles], dtype=float) ** 2
    cap = np.array([p.capacitance for p in profiles], dtype=float)
    compute = 0.5 * cap * cycles * freq2
    return EnergyBreakdown(
        transmit_j=transmit,
        compute_j=compute,
        per_ue_total_j=transmit + kappa * compute,
    )


def round_energy(mask: np.ndarray, breakdown: EnergyBreakdown) -> float:
    """Total energy of the scheduled set: sum over mask of per-UE totals."""
    mask = np.asarray(mask)
    if mask.shape != breakdown.per_ue_total_j.shape:
        raise ValueError("mask length does not match the energy breakdown")
    return float(mask.astype(float) @ breakdown.per_ue_total_j)
