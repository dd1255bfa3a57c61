"""Query mixing: lambda sampling, shuffling, volume normalization, and the
synthetic additive-noise / FIR-reverb augmentation used in place of recorded
noise corpora.

Only query utterances are ever mixed; supports pass through untouched so
prototypes are built from original utterances.  Waveforms are normalized to
unit RMS before mixing so the interpolation coefficient controls the true
mixing proportion.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, NumericError

MIX_LEVELS = ("waveform", "feature")


@dataclass
class MixupConfig:
    alpha: float = 0.4
    level: str = "waveform"
    enabled: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError(f"mixup.alpha must be positive, got {self.alpha}")
        if self.level not in MIX_LEVELS:
            raise ConfigError(f"mixup.level must be one of {MIX_LEVELS}, got {self.level!r}")


@dataclass
class AugmentConfig:
    enabled: bool = False
    snr_min_db: float = 5.0
    snr_max_db: float = 20.0
    reverb_taps: int = 0

    def __post_init__(self):
        if self.snr_min_db > self.snr_max_db:
            raise ConfigError(
                f"aug.snr_min_db ({self.snr_min_db}) exceeds aug.snr_max_db ({self.snr_max_db})"
            )
        if self.reverb_taps < 0:
            raise ConfigError(f"aug.reverb_taps must be >= 0, got {self.reverb_taps}")


@dataclass
class MixResult:
    """Mixed query rows plus the (lambda, shuffle) that produced them."""

    mixed: np.ndarray
    lam: float
    shuffle: np.ndarray


def sample_lambda(config, rng):
    """One interpolation coefficient per training batch, lam ~ Beta(a, a)."""
    if config.alpha <= 0:
        raise ConfigError(f"mixup.alpha must be positive, got {config.alpha}")
    return float(rng.beta(config.alpha, config.alpha))


def sample_shuffle(n, rng):
    """Uniform random permutation of 0..n-1 (fixed points allowed)."""
    if n < 2:
        raise ContractError(f"need at least 2 rows to shuffle, got {n}")
    return rng.permutation(n)


def normalize_volume(waveform):
    """Scale a waveform to RMS amplitude exactly 1.0."""
    waveform = np.asarray(waveform, dtype=np.float64)
    if waveform.size == 0:
        raise ContractError("cannot normalize an empty waveform")
    rms = np.sqrt(np.mean(waveform * waveform))
    if rms == 0.0:
        raise NumericError("cannot normalize silence (all-zero waveform)")
    return waveform / rms


def mix_inputs(queries, config, rng):
    """Convex-combine query rows: mixed[i] = lam*q[i] + (1-lam)*q[shuffle[i]].

    With mixing disabled this is an explicit pass-through (lam=1, identity
    shuffle) and the rng is not consumed.  At waveform level, callers
    normalize rows to unit RMS first.
    """
    queries = np.asarray(queries, dtype=np.float64)
    n = queries.shape[0]
    if not config.enabled:
        return MixResult(mixed=queries.copy(), lam=1.0, shuffle=np.arange(n))
    lam = sample_lambda(config, rng)
    shuffle = sample_shuffle(n, rng)
    mixed = lam * queries + (1.0 - lam) * queries[shuffle]
    return MixResult(mixed=mixed, lam=lam, shuffle=shuffle)


def _reverb_kernel(n_taps, rng):
    """Causal FIR with a unit direct path and exponentially decaying tail."""
    taps = np.zeros(n_taps)
    taps[0] = 1.0
    if n_taps > 1:
        k = np.arange(1, n_taps)
        taps[1:] = rng.standard_normal(n_taps - 1) * np.exp(-3.0 * k / n_taps) * 0.5
    return taps


def augment(waveform, config, rng):
    """Additive white noise at a random SNR, optional synthetic reverb.

    The signal is normalized to unit RMS, noise is added at an SNR drawn
    uniformly from [snr_min_db, snr_max_db], the result is optionally
    convolved with a random decaying FIR, and the output is re-normalized to
    unit RMS.  Disabled augmentation degenerates to plain normalization.
    """
    x = normalize_volume(waveform)
    if not config.enabled:
        return x
    snr_db = float(rng.uniform(config.snr_min_db, config.snr_max_db))
    noise_rms = 10.0 ** (-snr_db / 20.0)
    x = x + noise_rms * rng.standard_normal(x.size)
    if config.reverb_taps > 1:
        taps = _reverb_kernel(config.reverb_taps, rng)
        x = np.convolve(x, taps)[: x.size]
    return normalize_volume(x)
