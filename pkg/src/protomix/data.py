"""Corpora: synthetic speaker generation, WAV/manifest ingestion, downsampling,
and N x M batch sampling with random fixed-length segments.

The synthetic generator stands in for a recorded corpus at desk scale: each
speaker is a harmonic source (fundamental + per-speaker harmonic envelope +
short shaping FIR) and each utterance varies phase, gain, pitch jitter, and
additive noise.  A `difficulty` knob in [0, 1] scales the jitter and noise so
speakers range from trivially separable to heavily confusable.
"""

import logging
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, FormatError, ManifestError

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0

# Per-speaker harmonic count; enough to give distinct spectral envelopes
# below a 16 kHz Nyquist for fundamentals in [80, 300] Hz.
N_HARMONICS = 12

# difficulty=1 maps to this much pitch jitter (Hz std) and this
# noise-to-signal RMS ratio; frozen after nearest-centroid calibration.
JITTER_HZ_AT_FULL_DIFFICULTY = 8.0
NOISE_RATIO_AT_FULL_DIFFICULTY = 0.6


@dataclass
class Utterance:
    speaker_id: str
    samples: np.ndarray
    sample_rate: int
    utterance_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ContractError(f"utterance {self.utterance_id!r} has no samples")

    @property
    def duration_seconds(self):
        return self.samples.size / self.sample_rate


@dataclass
class Corpus:
    utterances: list
    split: str = "train"

    def speakers(self):
        seen = {}
        for utt in self.utterances:
            seen.setdefault(utt.speaker_id, None)
        return list(seen)

    def by_speaker(self):
        groups = {}
        for utt in self.utterances:
            groups.setdefault(utt.speaker_id, []).append(utt)
        return groups

    def __len__(self):
        return len(self.utterances)


@dataclass
class SpeakerProfile:
    """Frozen voice characteristics of one synthetic speaker."""

    fundamental_hz: float
    harmonic_amps: np.ndarray
    filter_coeffs: np.ndarray
    jitter_std: float = 0.0

    def __post_init__(self):
        self.harmonic_amps = np.asarray(self.harmonic_amps, dtype=np.float64)
        self.filter_coeffs = np.asarray(self.filter_coeffs, dtype=np.float64)
        if not 80.0 <= self.fundamental_hz <= 300.0:
            raise ConfigError(
                f"fundamental must be in [80, 300] Hz, got {self.fundamental_hz}"
            )
        if not np.any(self.harmonic_amps != 0.0):
            raise ConfigError("speaker profile needs at least one nonzero harmonic")
        if self.jitter_std < 0:
            raise ConfigError(f"jitter_std must be >= 0, got {self.jitter_std}")


@dataclass
class BatchSpec:
    speakers_per_batch: int
    utterances_per_speaker: int
    segment_seconds: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.speakers_per_batch < 2:
            raise ConfigError(f"need N >= 2 speakers per batch, got {self.speakers_per_batch}")
        if self.utterances_per_speaker < 2:
            raise ConfigError(f"need M >= 2 utterances per speaker, got {self.utterances_per_speaker}")
        if self.segment_seconds <= 0:
            raise ConfigError(f"segment_seconds must be positive, got {self.segment_seconds}")


@dataclass
class Batch:
    """N x M grid of equal-length segments; the last utterance per speaker is
    the query."""

    segments: np.ndarray  # (N, M, L)
    speaker_ids: list

    @property
    def supports(self):
        return self.segments[:, :-1, :]

    @property
    def queries(self):
        return self.segments[:, -1, :]


def sample_speaker_profile(rng, difficulty=0.0):
    """Draw one speaker's voice characteristics."""
    rolloff = rng.uniform(0.3, 1.5)
    amps = rng.uniform(0.2, 1.0, N_HARMONICS) / np.arange(1, N_HARMONICS + 1) ** rolloff
    coeffs = np.concatenate(([1.0], rng.uniform(-0.5, 0.5, 6)))
    return SpeakerProfile(
        fundamental_hz=float(rng.uniform(80.0, 300.0)),
        harmonic_amps=amps,
        filter_coeffs=coeffs,
        jitter_std=difficulty * JITTER_HZ_AT_FULL_DIFFICULTY,
    )


def synthesize_utterance(profile, seconds, sample_rate, rng, noise_ratio=0.0):
    """Render one utterance from a speaker profile.

    Random per-utterance phase, gain in [0.5, 2], pitch jitter
    ~ Normal(0, jitter_std), and white noise at `noise_ratio` of the signal
    RMS.
    """
    n = int(round(seconds * sample_rate))
    f0 = profile.fundamental_hz + float(rng.normal(0.0, profile.jitter_std))
    f0 = max(f0, 40.0)
    t = np.arange(n) / sample_rate
    phases = rng.uniform(0.0, 2.0 * np.pi, profile.harmonic_amps.size)
    signal = np.zeros(n)
    for h, (amp, phase) in enumerate(zip(profile.harmonic_amps, phases), start=1):
        freq = h * f0
        if freq >= 0.45 * sample_rate:
            break
        signal += amp * np.sin(2.0 * np.pi * freq * t + phase)
    signal = np.convolve(signal, profile.filter_coeffs)[:n]
    signal *= float(rng.uniform(0.5, 2.0))
    if noise_ratio > 0.0:
        rms = np.sqrt(np.mean(signal * signal))
        signal = signal + rng.standard_normal(n) * (noise_ratio * rms)
    return signal


def generate_synthetic_corpus(
    n_speakers,
    utterances_per_speaker,
    utterance_seconds,
    sample_rate,
    difficulty,
    rng,
    split="train",
    speaker_prefix="spk",
    segment_seconds=2.0,
):
    """Deterministic synthetic corpus; one profile per speaker."""
    if n_speakers < 2:
        raise ContractError(f"need at least 2 speakers, got {n_speakers}")
    if not 0.0 <= difficulty <= 1.0:
        raise ConfigError(f"difficulty must be in [0, 1], got {difficulty}")
    if utterance_seconds < 2.0 * segment_seconds:
        raise ConfigError(
            f"utterance_seconds ({utterance_seconds}) must be at least twice the "
            f"training segment length ({segment_seconds})"
        )
    noise_ratio = difficulty * NOISE_RATIO_AT_FULL_DIFFICULTY
    utterances = []
    for s in range(n_speakers):
        profile = sample_speaker_profile(rng, difficulty)
        speaker_id = f"{speaker_prefix}{s:04d}"
        for u in range(utterances_per_speaker):
            samples = synthesize_utterance(
                profile, utterance_seconds, sample_rate, rng, noise_ratio
            )
            utterances.append(
                Utterance(
                    speaker_id=speaker_id,
                    samples=samples,
                    sample_rate=sample_rate,
                    utterance_id=f"{speaker_id}_{u:03d}",
                )
            )
    return Corpus(utterances=utterances, split=split)


def downsample_corpus(corpus, utterances_per_speaker, rng):
    """Keep exactly `utterances_per_speaker` random utterances per speaker.

    Speakers with fewer are dropped (reported via logging, not fatal).
    Selection order within a speaker is preserved.
    """
    if utterances_per_speaker < 2:
        raise ContractError(
            f"downsampling needs >= 2 utterances per speaker, got {utterances_per_speaker}"
        )
    kept = []
    dropped = 0
    for speaker, utts in corpus.by_speaker().items():
        if len(utts) < utterances_per_speaker:
            dropped += 1
            continue
        chosen = rng.choice(len(utts), size=utterances_per_speaker, replace=False)
        kept.extend(utts[i] for i in sorted(chosen))
    if dropped:
        logger.warning(
            "downsample: dropped %d speaker(s) with fewer than %d utterances",
            dropped,
            utterances_per_speaker,
        )
    return Corpus(utterances=kept, split=corpus.split)


def assert_disjoint_speakers(train, evaluation):
    overlap = set(train.speakers()) & set(evaluation.speakers())
    if overlap:
        raise ContractError(
            f"train and eval splits share speakers: {sorted(overlap)[:5]}"
        )


def sample_batch(corpus, spec, rng):
    """Draw N distinct speakers x M distinct utterances x one random segment.

    Speakers are eligible when they have at least M utterances of at least
    segment length.  The segment length is exactly
    round(segment_seconds * sample_rate) samples.
    """
    groups = corpus.by_speaker()
    seg_samples = None
    eligible = []
    for speaker, utts in groups.items():
        rate = utts[0].sample_rate
        length = int(round(spec.segment_seconds * rate))
        seg_samples = length if seg_samples is None else seg_samples
        long_enough = [u for u in utts if u.samples.size >= length]
        if len(long_enough) >= spec.utterances_per_speaker:
            eligible.append((speaker, long_enough))
    n = spec.speakers_per_batch
    if len(eligible) < n:
        raise ContractError(
            f"batch needs {n} eligible speakers, corpus has {len(eligible)}"
        )
    picks = rng.choice(len(eligible), size=n, replace=False)
    m = spec.utterances_per_speaker
    segments = np.empty((n, m, seg_samples))
    speaker_ids = []
    for row, pick in enumerate(picks):
        speaker, utts = eligible[pick]
        speaker_ids.append(speaker)
        chosen = rng.choice(len(utts), size=m, replace=False)
        for col, idx in enumerate(chosen):
            samples = utts[idx].samples
            offset = int(rng.integers(0, samples.size - seg_samples + 1))
            segments[row, col] = samples[offset : offset + seg_samples]
    return Batch(segments=segments, speaker_ids=speaker_ids)


def write_wav(path, samples, sample_rate):
    """Write mono 16-bit PCM; floats are clipped to [-1, 32767/32768]."""
    samples = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.rint(samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(int(sample_rate))
        handle.writeframes(ints.tobytes())


def read_wav(path):
    """Read mono 16-bit PCM; returns (samples in [-1, 1), sample_rate)."""
    try:
        with wave.open(str(path), "rb") as handle:
            channels = handle.getnchannels()
            width = handle.getsampwidth()
            rate = handle.getframerate()
            frames = handle.readframes(handle.getnframes())
    except (wave.Error, EOFError, struct.error) as exc:
        raise FormatError(f"{path}: not a readable WAV file ({exc})") from exc
    if channels != 1:
        raise FormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise FormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    ints = np.frombuffer(frames, dtype="<i2")
    return ints.astype(np.float64) / PCM16_SCALE, rate


def load_manifest(manifest_path, split="train", expected_sample_rate=None):
    """Load a corpus from a tab-separated manifest.

    Each line is "speaker_id<TAB>relative_wav_path", paths relative to the
    manifest's directory.  Malformed lines raise with their line number; an
    empty manifest yields an empty corpus with a warning.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    utterances = []
    with open(manifest_path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ManifestError(
                    f"{manifest_path}:{lineno}: expected 'speaker_id<TAB>path', got {line!r}"
                )
            speaker_id, rel_path = parts
            wav_path = base / rel_path
            if not wav_path.is_file():
                raise ManifestError(f"{manifest_path}:{lineno}: audio file missing: {wav_path}")
            samples, rate = read_wav(wav_path)
            if expected_sample_rate is not None and rate != expected_sample_rate:
                raise ConfigError(
                    f"{wav_path}: sample rate {rate} does not match configured "
                    f"{expected_sample_rate} (resampling unsupported)"
                )
            utterances.append(
                Utterance(
                    speaker_id=speaker_id,
                    samples=samples,
                    sample_rate=rate,
                    utterance_id=rel_path,
                )
            )
    if not utterances:
        logger.warning("manifest %s contains no utterances", manifest_path)
    return Corpus(utterances=utterances, split=split)


def save_corpus(corpus, out_dir, manifest_name="manifest.tsv"):
    """Write every utterance as WAV plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for utt in corpus.utterances:
        rel = f"wav/{utt.utterance_id}.wav"
        write_wav(out_dir / rel, utt.samples, utt.sample_rate)
        lines.append(f"{utt.speaker_id}\t{rel}")
    manifest_path = out_dir / manifest_name
    manifest_path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return manifest_path
