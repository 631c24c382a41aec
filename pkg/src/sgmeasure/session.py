"""Manifest-driven analysis of a measurement session.

A session manifest lists, per test signal, the safeguarded excitation
period file and the recording of its repeated playback, plus the segment
bookkeeping (period length, segments per recording, preamble skip).  The
analysis pipeline is: plan segments, deconvolve each one, then separate
the time-invariant, random, LTI and signal-dependent responses.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import SampleStream, Spectrum, forward_dft_raw
from .errors import ManifestError, SampleRateMismatch
from .reports import SCHEMA_VERSION, AnalysisReport
from .separation import (
    SeparationResult,
    estimate_transfer,
    fractional_octave_smooth,
    plan_segments,
    signal_dependent_response,
    time_invariant_response,
)
from .wavio import read_audio

__all__ = ["SessionEntry", "SessionManifest", "load_manifest", "analyze_session"]


@dataclass(frozen=True)
class SessionEntry:
    """One test signal: its excitation period file and the recording of it."""

    excitation: Path
    recording: Path


@dataclass(frozen=True)
class SessionManifest:
    """Everything needed to reproduce an analysis run."""

    sample_rate: int
    period_length: int
    segments_per_recording: int
    skip_preamble: int
    entries: tuple[SessionEntry, ...]
    background_recording: Path | None = None
    seed: int | None = None
    theta_reference_db: float | None = None
    calibration: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def load_manifest(path: str | Path) -> SessionManifest:
    """Load and validate a session manifest; file paths resolve relative to it."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot load manifest {path}: {exc}") from exc
    base = path.parent

    def resolve(name: str) -> Path:
        p = base / name
        if not p.exists():
            raise ManifestError(f"manifest references missing file: {p}")
        return p

    try:
        period_length = int(doc["period_length"])
        sample_rate = int(doc["sample_rate"])
        segments = int(doc["segments_per_recording"])
        entries = tuple(
            SessionEntry(resolve(e["excitation"]), resolve(e["recording"]))
            for e in doc["entries"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"invalid manifest {path}: {exc}") from exc
    if not entries:
        raise ManifestError("manifest has no entries")
    skip = int(doc.get("skip_preamble", period_length))
    background = doc.get("background_recording")
    theta_db = doc.get("theta_reference_db")
    return SessionManifest(
        sample_rate=sample_rate,
        period_length=period_length,
        segments_per_recording=segments,
        skip_preamble=skip,
        entries=entries,
        background_recording=resolve(background) if background else None,
        seed=doc.get("seed"),
        theta_reference_db=float(theta_db) if theta_db is not None else None,
        calibration=doc.get("calibration", {}),
        schema_version=int(doc.get("schema_version", SCHEMA_VERSION)),
    )


def _read_checked(path: Path, manifest: SessionManifest) -> SampleStream:
    stream = read_audio(path)
    if stream.sample_rate != manifest.sample_rate:
        raise SampleRateMismatch(
            f"{path}: {stream.sample_rate} Hz, manifest says {manifest.sample_rate} Hz"
        )
    return stream


def _excitation_spectrum(path: Path, manifest: SessionManifest) -> tuple[Spectrum, float]:
    stream = _read_checked(path, manifest)
    L = manifest.period_length
    if len(stream) < L:
        raise ManifestError(f"{path}: excitation shorter than period length {L}")
    period = stream.samples[:L]
    spectrum = Spectrum(forward_dft_raw(period), manifest.sample_rate, hermitian=True)
    return spectrum, float(np.mean(period**2))


def separate_session(manifest: SessionManifest) -> tuple[SeparationResult, dict]:
    """Run the estimation pipeline; returns the separation plus power bookkeeping."""
    L = manifest.period_length
    h_sti_list, d_stv_list = [], []
    output_power, excitation_power = [], []
    for p, entry in enumerate(manifest.entries):
        spectrum, exc_power = _excitation_spectrum(entry.excitation, manifest)
        excitation_power.append(exc_power)
        recording = _read_checked(entry.recording, manifest)
        plan = plan_segments(
            len(recording), L, manifest.segments_per_recording, manifest.skip_preamble
        )
        estimates = [
            estimate_transfer(spectrum, recording, s, signal_id=p) for s in plan.starts
        ]
        output_power.append(
            float(
                np.mean(
                    recording.samples[plan.starts[0] : plan.starts[-1] + L] ** 2
                )
            )
        )
        h_sti, d_stv_sq = time_invariant_response(estimates)
        h_sti_list.append(h_sti)
        d_stv_list.append(d_stv_sq)
    p_count = len(manifest.entries)
    if p_count >= 2:
        h_slti, h_ssdr_sq = signal_dependent_response(h_sti_list)
    else:
        h_slti, h_ssdr_sq = h_sti_list[0], None
    result = SeparationResult(
        h_sti=np.vstack(h_sti_list),
        d_stv_sq=np.vstack(d_stv_list),
        h_slti=h_slti,
        h_ssdr_sq=h_ssdr_sq,
        m_count=manifest.segments_per_recording,
        p_count=p_count,
    )
    powers = {
        "output_power": float(np.mean(output_power)),
        "excitation_power": float(np.mean(excitation_power)),
    }
    return result, powers


def _background_level(manifest: SessionManifest, spectra: list[Spectrum]) -> np.ndarray:
    """Mean |noise DFT / X_s|^2 over all signals and available segments."""
    recording = _read_checked(manifest.background_recording, manifest)
    L = manifest.period_length
    usable = (len(recording) - manifest.skip_preamble) // L
    if usable < 1:
        raise ManifestError("background recording too short for one segment")
    plan = plan_segments(len(recording), L, usable, manifest.skip_preamble)
    acc = np.zeros(L)
    n = 0
    for spectrum in spectra:
        for s in plan.starts:
            h = estimate_transfer(spectrum, recording, s)
            acc += np.abs(h.h_bins) ** 2
            n += 1
    return acc / n


def _db_power(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(values)


def analyze_session(
    manifest: SessionManifest, smooth_fraction: float | None = None
) -> AnalysisReport:
    """Full analysis: separation, optional smoothing, one-sided report table.

    Random and signal-dependent columns come in raw and output-power
    normalized variants; the normalization constant is recorded in the
    summary.  Smoothing operates on the power quantities.
    """
    result, powers = separate_session(manifest)
    L = manifest.period_length
    half = L // 2

    lti_power = np.abs(result.h_slti) ** 2
    random_power = np.mean(result.d_stv_sq, axis=0)
    sdr_power = result.h_ssdr_sq
    background_power = None
    if manifest.background_recording is not None:
        spectra = [
            _excitation_spectrum(e.excitation, manifest)[0] for e in manifest.entries
        ]
        background_power = _background_level(manifest, spectra)

    normalization_db = 10.0 * math.log10(
        powers["output_power"] / powers["excitation_power"]
    )
    freq = np.arange(half + 1) * (manifest.sample_rate / L)
    table: dict[str, list] = {"frequency_hz": [float(f) for f in freq]}

    def add_power_column(name: str, power: np.ndarray | None, normalized: bool = False):
        if power is None:
            return
        col = _db_power(power)[: half + 1]
        if normalized:
            col = col - normalization_db
        table[name] = [float(v) for v in col]

    add_power_column("lti_gain_db", lti_power)
    add_power_column("random_level_db", random_power)
    add_power_column("random_level_norm_db", random_power, normalized=True)
    add_power_column("signal_dependent_level_db", sdr_power)
    add_power_column("signal_dependent_level_norm_db", sdr_power, normalized=True)
    add_power_column("background_level_db", background_power)

    if smooth_fraction is not None:
        smooth = lambda p: fractional_octave_smooth(p, smooth_fraction)
        add_power_column("lti_gain_smooth_db", smooth(lti_power))
        add_power_column("random_level_smooth_db", smooth(random_power))
        if sdr_power is not None:
            add_power_column("signal_dependent_level_smooth_db", smooth(sdr_power))
        if background_power is not None:
            add_power_column("background_level_smooth_db", smooth(background_power))

    summary = {
        "sample_rate": manifest.sample_rate,
        "period_length": L,
        "m_count": result.m_count,
        "p_count": result.p_count,
        "skip_preamble": manifest.skip_preamble,
        "smoothing_fraction": smooth_fraction,
        "normalization_db": normalization_db,
        "output_power_db": 10.0 * math.log10(powers["output_power"]),
        "excitation_power_db": 10.0 * math.log10(powers["excitation_power"]),
        "theta_reference_db": manifest.theta_reference_db,
        "seed": manifest.seed,
        "calibration": manifest.calibration,
    }
    return AnalysisReport(summary=summary, table=table)
