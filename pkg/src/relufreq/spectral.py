"""Discrete Fourier utilities: spectra, DC extraction, error metrics, occupancy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroReferenceError
from .multitone import Signal


@dataclass
class Spectrum:
    """Complex DFT bins of a sampled signal.

    Bins are normalized by 1/N so a unit-amplitude, bin-aligned cosine shows
    magnitude 0.5 at its +/-f bins and a constant 1 signal shows 1.0 at DC.
    Bin k sits at frequency k * bin_resolution for k <= N/2; upper bins mirror
    the negative frequencies.
    """

    bins: np.ndarray
    bin_resolution: float
    sample_rate: float

    def __len__(self) -> int:
        return int(self.bins.size)

    def one_sided(self) -> "tuple[np.ndarray, np.ndarray]":
        """(frequencies, magnitudes) for bins 0..N//2."""
        half = self.bins.size // 2
        k = np.arange(half + 1)
        return k * self.bin_resolution, np.abs(self.bins[: half + 1])


def spectrum(signal: Signal) -> Spectrum:
    n = len(signal)
    bins = np.fft.fft(signal.samples) / n
    return Spectrum(bins, signal.sample_rate / n, signal.sample_rate)


def dc_of(signal: Signal) -> float:
    """Arithmetic mean of the samples (the DC component)."""
    return float(np.mean(signal.samples))


def rrmse(reference: Signal, estimate: Signal) -> float:
    """Relative root mean squared error: ||estimate - reference||_2 / ||reference||_2."""
    if len(reference) != len(estimate):
        raise ValueError("reference and estimate must have equal length")
    ref_norm = float(np.linalg.norm(reference.samples))
    if ref_norm == 0.0:
        raise ZeroReferenceError("reference signal has zero norm")
    return float(np.linalg.norm(estimate.samples - reference.samples) / ref_norm)


def band_occupancy(spec: Spectrum, threshold_fraction: float) -> float:
    """Fraction of bins in (0, Nyquist] whose magnitude exceeds a relative threshold.

    The threshold is threshold_fraction times the maximum magnitude over that
    range; a signal concentrated in one bin scores 1/(N/2), a flat spectrum 1.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie strictly between 0 and 1")
    half = len(spec) // 2
    mags = np.abs(spec.bins[1 : half + 1])
    if mags.size == 0:
        return 0.0
    peak = float(mags.max())
    if peak == 0.0:
        return 0.0
    return float(np.count_nonzero(mags > threshold_fraction * peak) / mags.size)


def energy_fraction_above(spec: Spectrum, cutoff_hz: float) -> float:
    """Fraction of total spectral energy carried by bins above cutoff_hz.

    Uses the folded (absolute) frequency of every bin, so conjugate pairs
    count on both sides and the ratio is exact under Parseval.
    """
    n = len(spec)
    k = np.arange(n)
    folded = np.minimum(k, n - k) * spec.bin_resolution
    energy = np.abs(spec.bins) ** 2
    total = float(energy.sum())
    if total == 0.0:
        return 0.0
    return float(energy[folded > cutoff_hz].sum() / total)
