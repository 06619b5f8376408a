"""Frequency-selective Rayleigh channel and the CFO-rotated signal model.

Two independent realizations of the same received frame are provided:

* ``transmit_receive`` works sample-by-sample in the time domain: cyclic
  prefix prepend, linear convolution with the taps, CFO rotation, additive
  noise, prefix removal.
* ``model_receive`` assembles the equivalent matrix model explicitly and
  multiplies it out.

With zero noise the two agree to ~1e-12 relative; that cross-check is the
main correctness oracle of the repository, so keep the paths independent.

Conventions. The CFO `cfo` is normalised by the subcarrier spacing and the
rotation's phase reference is the start of the cyclic prefix, i.e. the kept
sample n (0-based after prefix removal) is rotated by
exp(j*2*pi*cfo*(n + cp_len)/N).  Channel taps are constant over the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .numerics import RandomSource, complex_normal, dft_matrix, phase_ramp
from .training import ConfigError, SystemConfig, TrainingSet


@dataclass(frozen=True)
class ChannelProfile:
    """Tap delay/power profile; powers are relative dB and get normalised."""

    delays: tuple[int, ...]
    powers_db: tuple[float, ...]

    def __post_init__(self):
        if len(self.delays) != len(self.powers_db) or not self.delays:
            raise ConfigError("profile needs equal-length, non-empty delay and power lists")
        if any(d < 0 for d in self.delays):
            raise ConfigError("tap delays must be non-negative")
        if any(b >= a for a, b in zip(self.delays[1:], self.delays)):
            raise ConfigError("tap delays must be strictly increasing")

    @property
    def length(self) -> int:
        return self.delays[-1] + 1

    @property
    def powers_linear(self) -> np.ndarray:
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()


def reference_profile() -> ChannelProfile:
    """Six-tap wideband profile used by the shipped presets."""
    return ChannelProfile(
        delays=(0, 4, 16, 24, 46, 74),
        powers_db=(0.0, -0.9, -4.9, -8.0, -7.8, -23.9),
    )


@dataclass(frozen=True)
class ChannelRealization:
    """Taps for every (receive, transmit) pair, zero off the delay grid.

    taps has shape (n_rx, n_tx, chan_len); `stacked(nu)` returns the flat
    per-receive-antenna vector in transmit-major order, matching the column
    layout of the model matrix.
    """

    taps: np.ndarray = field(repr=False)

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[1]

    @property
    def length(self) -> int:
        return self.taps.shape[2]

    def stacked(self, rx: int) -> np.ndarray:
        return self.taps[rx].reshape(-1)


@dataclass(frozen=True)
class ReceivedFrame:
    """One received training frame after cyclic prefix removal.

    samples:       (n_rx, N) complex.
    true_cfo:      the offset that was applied, in subcarrier spacings.
    noise_var:     per-sample complex noise variance that was added.
    stacked_power: mean |entry|^2 of the equivalent stacked signal matrix
                   (the per-row signal power entering the SNR analysis);
                   equals received signal power per sample / n_tx.
    """

    samples: np.ndarray = field(repr=False)
    true_cfo: float
    noise_var: float
    stacked_power: float


def draw_channel(profile: ChannelProfile, cfg: SystemConfig,
                 rng: RandomSource | np.random.Generator) -> ChannelRealization:
    """Independent circular Gaussian taps CN(0, p_l) on the profile's delay grid.

    Accepts either a RandomSource (fresh stream) or an already-running
    Generator, so a caller can draw the channel and other trial quantities
    from one shared stream.
    """
    if profile.length > cfg.chan_len:
        raise ConfigError(
            f"profile length {profile.length} exceeds configured chan_len {cfg.chan_len}"
        )
    gen = rng if isinstance(rng, np.random.Generator) else rng.generator()
    taps = np.zeros((cfg.n_rx, cfg.n_tx, cfg.chan_len), dtype=complex)
    for delay, power in zip(profile.delays, profile.powers_linear):
        taps[:, :, delay] = complex_normal(gen, (cfg.n_rx, cfg.n_tx), power)
    return ChannelRealization(taps=taps)


def _check_cfo(cfo: float, cfg: SystemConfig) -> None:
    if not (-cfg.cfo_half_range < cfo < cfg.cfo_half_range):
        raise ValueError(
            f"cfo={cfo} outside the identifiable range "
            f"(-{cfg.cfo_half_range}, {cfg.cfo_half_range})"
        )


def transmit_receive(ts: TrainingSet, ch: ChannelRealization, cfo: float,
                     noise_var: float, cfg: SystemConfig,
                     rng: RandomSource | None = None) -> ReceivedFrame:
    """Time-domain simulation of one training frame.

    Per receive antenna: sum over transmit antennas of the linear convolution
    of the CP-extended time sequence with the taps, keep the N samples after
    the prefix, rotate by the CFO ramp, add CN(0, noise_var) noise.
    """
    _check_cfo(cfo, cfg)
    n, ng = cfg.n_subcarriers, cfg.cp_len
    if ch.length > ng:
        raise ConfigError("channel memory longer than the cyclic prefix")
    rot = np.exp(2j * np.pi * cfo * (np.arange(n) + ng) / n)
    out = np.zeros((cfg.n_rx, n), dtype=complex)
    for nu in range(cfg.n_rx):
        acc = np.zeros(n, dtype=complex)
        for mu in range(cfg.n_tx):
            with_cp = np.concatenate([ts.time_sequences[mu][-ng:], ts.time_sequences[mu]])
            acc += np.convolve(with_cp, ch.taps[nu, mu])[ng:ng + n]
        out[nu] = rot * acc
    signal_power = float(np.mean(np.abs(out) ** 2))
    if noise_var > 0.0:
        if rng is None:
            raise ConfigError("noisy transmit_receive needs a RandomSource")
        out = out + complex_normal(rng.generator(), out.shape, noise_var)
    return ReceivedFrame(samples=out, true_cfo=cfo, noise_var=noise_var,
                         stacked_power=signal_power / cfg.n_tx)


def model_matrix(ts: TrainingSet, cfg: SystemConfig) -> np.ndarray:
    """Explicit N x (n_tx * chan_len) matrix mapping stacked taps to a frame.

    Columns are, per transmit antenna: take the channel's frequency response
    on that antenna's comb, weight by the pilots, and spread back to the time
    domain.  The response columns carry the sqrt(N) factor that makes
    sqrt(N) * model_matrix @ taps equal the time-domain path exactly.
    """
    if ts.kind != "cbts":
        raise ConfigError("matrix model requires comb-structured (cbts) training")
    n, p, l = cfg.n_subcarriers, cfg.pilot_len, cfg.chan_len
    lattices = [cfg.lattice(mu) for mu in range(cfg.n_tx)]
    # only the comb rows of the N-point DFT are ever touched, so build those
    # directly instead of the dense matrix
    comb_all = np.concatenate(lattices)
    f_bar = np.exp(-2j * np.pi * np.outer(comb_all, np.arange(n)) / n) / np.sqrt(n)
    pilot_diag = np.concatenate([ts.freq_pilots[mu] for mu in range(cfg.n_tx)])
    f_breve = np.zeros((cfg.n_tx * p, cfg.n_tx * l), dtype=complex)
    for mu in range(cfg.n_tx):
        # sqrt(N) * F_N[comb, :L]: the channel's frequency response columns
        f_breve[mu * p:(mu + 1) * p, mu * l:(mu + 1) * l] = np.exp(
            -2j * np.pi * np.outer(lattices[mu], np.arange(l)) / n)
    return f_bar.conj().T @ (pilot_diag[:, None] * f_breve)


def model_receive(ts: TrainingSet, ch: ChannelRealization, cfo: float,
                  cfg: SystemConfig) -> ReceivedFrame:
    """Noiseless frame from the assembled matrix model (the oracle path)."""
    _check_cfo(cfo, cfg)
    n, ng = cfg.n_subcarriers, cfg.cp_len
    s = model_matrix(ts, cfg)
    front = np.sqrt(n) * np.exp(2j * np.pi * cfo * ng / n)
    ramp = phase_ramp(n, cfo, n)
    out = np.vstack([front * ramp * (s @ ch.stacked(nu)) for nu in range(cfg.n_rx)])
    signal_power = float(np.mean(np.abs(out) ** 2))
    return ReceivedFrame(samples=out, true_cfo=cfo, noise_var=0.0,
                         stacked_power=signal_power / cfg.n_tx)


def steering_matrix(cfo: float, cfg: SystemConfig) -> np.ndarray:
    """Q x n_tx matrix of per-period phase progressions, column mu has
    entries exp(j*2*pi*(cfo + offset_mu)*q/Q)."""
    q = np.arange(cfg.n_periods)
    offs = np.asarray(cfg.offsets, dtype=float)
    return np.exp(2j * np.pi * np.outer(q, offs + cfo) / cfg.n_periods)


def stacked_signal_matrix(ts: TrainingSet, ch: ChannelRealization, cfo: float,
                          cfg: SystemConfig) -> np.ndarray:
    """Noiseless n_tx x (n_rx * P) stacked signal matrix.

    Row mu, block nu holds the common length-P period transmitted by antenna
    mu as seen at receive antenna nu, so that
    steering_matrix(cfo) @ X reproduces the period-stacked noiseless frame.
    """
    _check_cfo(cfo, cfg)
    if ts.kind != "cbts":
        raise ConfigError("stacked signal model requires comb-structured (cbts) training")
    n, p, l = cfg.n_subcarriers, cfg.pilot_len, cfg.chan_len
    fp = dft_matrix(p)
    front = np.sqrt(p) * np.exp(2j * np.pi * cfo * cfg.cp_len / n)
    x = np.zeros((cfg.n_tx, cfg.n_rx * p), dtype=complex)
    for mu in range(cfg.n_tx):
        comb_response = np.exp(-2j * np.pi * np.outer(cfg.lattice(mu), np.arange(l)) / n)
        ramp = phase_ramp(p, cfo + cfg.offsets[mu], n)
        for nu in range(cfg.n_rx):
            period = fp.conj().T @ (ts.freq_pilots[mu] * (comb_response @ ch.taps[nu, mu]))
            x[mu, nu * p:(nu + 1) * p] = front * ramp * period
    return x


def frame_to_csv(frame: ReceivedFrame, fh: IO[str]) -> None:
    """Debug dump: one row per (antenna, sample)."""
    import csv as _csv

    writer = _csv.writer(fh)
    writer.writerow(["antenna", "sample", "real", "imag"])
    for nu in range(frame.samples.shape[0]):
        for n, v in enumerate(frame.samples[nu]):
            writer.writerow([nu, n, f"{v.real:.12g}", f"{v.imag:.12g}"])
