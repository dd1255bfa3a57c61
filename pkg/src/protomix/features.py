"""Log-mel feature extraction.

Frames a waveform with a 25 ms Hann window every 10 ms, takes the magnitude
spectrum, projects onto a triangular mel filterbank, and applies a floored
natural log.  Mel scale: m = 2595 * log10(1 + f/700), filters spanning DC to
Nyquist.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, ContractError


@dataclass(frozen=True)
class FeatureConfig:
    sample_rate: int = 16000
    window_seconds: float = 0.025
    hop_seconds: float = 0.010
    n_mels: int = 40
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.window_seconds <= 0 or self.hop_seconds <= 0:
            raise ConfigError("window and hop must be positive")
        if self.n_mels < 1:
            raise ConfigError(f"n_mels must be >= 1, got {self.n_mels}")

    @property
    def window_samples(self):
        return int(round(self.window_seconds * self.sample_rate))

    @property
    def hop_samples(self):
        return int(round(self.hop_seconds * self.sample_rate))

    @property
    def n_fft(self):
        n = 1
        while n < self.window_samples:
            n *= 2
        return n


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def _mel_filterbank(sample_rate, n_fft, n_mels):
    """Triangular filters (n_mels, n_fft//2 + 1) spanning 0..Nyquist."""
    nyquist = sample_rate / 2.0
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), n_mels + 2))
    bin_hz = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fbank = np.zeros((n_mels, bin_hz.size))
    for m in range(n_mels):
        left, center, right = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - left) / (center - left)
        falling = (right - bin_hz) / (right - center)
        fbank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fbank


def mel_filterbank(config):
    return _mel_filterbank(config.sample_rate, config.n_fft, config.n_mels)


def frame_count(n_samples, config):
    """Number of full windows: floor((L - win) / hop) + 1."""
    win = config.window_samples
    if n_samples < win:
        raise ContractError(
            f"segment of {n_samples} samples is shorter than one window ({win})"
        )
    return (n_samples - win) // config.hop_samples + 1


def _hann(n):
    # Periodic Hann, the usual choice for spectral analysis frames.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def extract_features(segment, config):
    """Log-mel frames for one waveform segment: (T, n_mels)."""
    segment = np.asarray(segment, dtype=np.float64)
    if segment.ndim != 1:
        raise ContractError(f"expected a 1-D waveform, got shape {segment.shape}")
    win = config.window_samples
    hop = config.hop_samples
    t = frame_count(segment.size, config)
    frames = np.lib.stride_tricks.sliding_window_view(segment, win)[:: hop][:t]
    windowed = frames * _hann(win)
    magnitude = np.abs(np.fft.rfft(windowed, n=config.n_fft, axis=1))
    mel = magnitude @ mel_filterbank(config).T
    return np.log(np.maximum(mel, config.log_floor))


def extract_features_batch(segments, config):
    """Stack of log-mel frames for equal-length segments: (B, T, n_mels)."""
    segments = np.asarray(segments, dtype=np.float64)
    if segments.ndim != 2:
        raise ContractError(f"expected (B, L) segments, got shape {segments.shape}")
    win = config.window_samples
    hop = config.hop_samples
    t = frame_count(segments.shape[1], config)
    frames = np.lib.stride_tricks.sliding_window_view(segments, win, axis=1)[:, ::hop][:, :t]
    windowed = frames * _hann(win)
    magnitude = np.abs(np.fft.rfft(windowed, n=config.n_fft, axis=2))
    mel = magnitude @ mel_filterbank(config).T
    return np.log(np.maximum(mel, config.log_floor))
