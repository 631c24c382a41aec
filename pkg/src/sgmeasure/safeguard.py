"""DFT-magnitude flooring: turn an arbitrary period into a safeguarded excitation.

Flooring raises every DFT bin magnitude to at least a threshold while
preserving phase, so the bin-wise deconvolution ``Y[k]/X[k]`` stays well
conditioned at every frequency.  dB flooring levels are always relative to
the mean absolute bin magnitude of the source spectrum (0 dB reference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PeriodicSignal, SampleStream, Spectrum, forward_dft, inverse_dft, power_db
from .errors import DegenerateSpectrum

__all__ = [
    "FloorThreshold",
    "SafeguardReport",
    "default_threshold",
    "threshold_from_db",
    "apply_floor",
    "safeguard_signal",
    "build_test_stream",
]


@dataclass(frozen=True)
class FloorThreshold:
    """Magnitude floor in linear DFT units.

    ``reference_db`` is 20*log10(theta / mean |X[k]|) of the spectrum the
    threshold was derived from.
    """

    theta_linear: float
    reference_db: float

    def __post_init__(self):
        if not (self.theta_linear > 0):
            raise ValueError("theta_linear must be positive")


@dataclass(frozen=True)
class SafeguardReport:
    """What flooring did: bins touched and added deterministic level.

    ``added_component_db`` is the power of (x_s - x) relative to the power
    of x; -inf when no bin changed.
    """

    bins_changed: int
    fraction_changed: float
    added_component_db: float


def _mean_magnitude(spectrum: Spectrum) -> float:
    mean_mag = float(np.mean(np.abs(spectrum.bins)))
    if mean_mag == 0.0:
        raise DegenerateSpectrum("all-zero spectrum has no magnitude reference")
    return mean_mag


def default_threshold(spectrum: Spectrum) -> FloorThreshold:
    """Threshold at the average absolute bin magnitude (the 0 dB reference)."""
    return FloorThreshold(_mean_magnitude(spectrum), 0.0)


def threshold_from_db(spectrum: Spectrum, level_db: float) -> FloorThreshold:
    """Threshold at ``level_db`` relative to the mean absolute bin magnitude."""
    mean_mag = _mean_magnitude(spectrum)
    return FloorThreshold(mean_mag * 10.0 ** (level_db / 20.0), float(level_db))


def apply_floor(spectrum: Spectrum, theta: FloorThreshold) -> Spectrum:
    """Raise every bin magnitude to at least theta, preserving phase.

    Bins at or above the threshold pass through bit-exactly; zero bins are
    filled with theta + 0i (phase 0 keeps the spectrum Hermitian).
    """
    if not spectrum.hermitian:
        raise ValueError("apply_floor requires a Hermitian spectrum")
    th = theta.theta_linear
    bins = spectrum.bins
    mag = np.abs(bins)
    out = bins.copy()
    # few-ulp guard keeps repeated flooring bit-for-bit idempotent: a bin
    # already raised to the floor re-measures at th*(1 +- 2 ulp)
    low = (mag > 0) & (mag < th * (1.0 - 2.0**-50))
    out[low] = th * bins[low] / mag[low]
    out[mag == 0] = th
    return Spectrum(out, spectrum.sample_rate, hermitian=True)


def count_floored_bins(spectrum: Spectrum, theta: FloorThreshold) -> int:
    """Number of bins apply_floor would modify."""
    mag = np.abs(spectrum.bins)
    return int(np.count_nonzero(mag < theta.theta_linear * (1.0 - 2.0**-50)))


def safeguard_signal(
    signal: PeriodicSignal, theta: FloorThreshold
) -> tuple[PeriodicSignal, SafeguardReport]:
    """Floor the period's spectrum and return the safeguarded period plus report.

    A vacuous floor (no bin below the threshold) returns the input period
    unchanged rather than a transform round-trip of it.
    """
    spectrum = forward_dft(signal)
    changed = count_floored_bins(spectrum, theta)
    if changed == 0:
        report = SafeguardReport(0, 0.0, float("-inf"))
        return signal, report
    floored = apply_floor(spectrum, theta)
    safeguarded = inverse_dft(floored)
    added_db = power_db(safeguarded.samples - signal.samples) - power_db(signal.samples)
    report = SafeguardReport(
        bins_changed=changed,
        fraction_changed=changed / signal.period_length,
        added_component_db=added_db,
    )
    return safeguarded, report


def build_test_stream(period: PeriodicSignal, repeats: int, label: str = "") -> SampleStream:
    """Concatenate the period ``repeats`` times into a playable test stream."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    return SampleStream(np.tile(period.samples, repeats), period.sample_rate, label=label)
