"""Training sequence design for MIMO-OFDM frequency offset estimation.

Each transmit antenna gets a pilot comb occupying every Q-th subcarrier,
starting from a per-antenna offset.  Disjoint combs keep antennas orthogonal
in frequency; the comb structure makes the time-domain frame consist of Q
repetitions of a length-P period, which is what the correlation-diagonal
estimator exploits.

Two kinds are shipped:

* ``cbts`` - pilot values derived from cyclic shifts of a single constant-
  modulus quadratic-phase (Chu) generator sequence, giving perfect periodic
  autocorrelation and flat per-subcarrier power.
* ``rs``   - a control design with i.i.d. random-phase elements across the
  whole band and matched per-antenna energy, but none of the comb/correlation
  structure.  It exists to demonstrate how much the structured design buys.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .numerics import RandomSource, cyclic_shift, dft, phase_ramp


class ConfigError(ValueError):
    """Raised for dimension or parameter combinations the model cannot support."""


# Offset sets used by the shipped reference experiments.
OFFSETS_A = (3, 5, 11)
OFFSETS_B = (3, 7, 14)


@dataclass(frozen=True)
class SystemConfig:
    """All dimensioning parameters of the transceiver model.

    Attributes:
        n_subcarriers: full OFDM grid size N.
        pilot_len:     pilots per antenna P; the time-domain period length.
        n_tx, n_rx:    antenna counts.
        cp_len:        cyclic prefix length in samples.
        chan_len:      maximum channel impulse response length L in samples.
        offsets:       per-antenna comb offsets, distinct, in [0, Q-1].
        chu_root:      generator-sequence root, coprime with pilot_len.

    The repetition count Q = N/P must be even (N divisible by 2P) and larger
    than n_tx.  The estimator's accuracy analysis additionally assumes
    P >= chan_len; the shipped wideband preset violates that deliberately
    (its power profile concentrates energy in the first few taps, which is
    the condition that actually matters), so it is not enforced here.
    """

    n_subcarriers: int
    pilot_len: int
    n_tx: int
    n_rx: int
    cp_len: int
    chan_len: int
    offsets: tuple[int, ...]
    chu_root: int = 1

    def __post_init__(self):
        n, p = self.n_subcarriers, self.pilot_len
        if p < 2 or n < p:
            raise ConfigError(f"need n_subcarriers >= pilot_len >= 2, got {n}, {p}")
        if n % p != 0 or n % (2 * p) != 0:
            raise ConfigError(f"n_subcarriers must be a multiple of 2*pilot_len ({n} vs {p})")
        q = n // p
        if not (0 < self.n_tx < q):
            raise ConfigError(f"n_tx must satisfy 0 < n_tx < Q={q}, got {self.n_tx}")
        if self.n_rx < 1:
            raise ConfigError("n_rx must be >= 1")
        if len(self.offsets) != self.n_tx:
            raise ConfigError("need exactly one comb offset per transmit antenna")
        if len(set(self.offsets)) != self.n_tx:
            raise ConfigError(f"comb offsets must be distinct, got {self.offsets}")
        if any(not (0 <= i <= q - 1) for i in self.offsets):
            raise ConfigError(f"comb offsets must lie in [0, {q - 1}], got {self.offsets}")
        if math.gcd(self.chu_root, p) != 1:
            raise ConfigError(f"chu_root={self.chu_root} must be coprime with pilot_len={p}")
        if self.chan_len < 1 or self.chan_len > self.cp_len:
            raise ConfigError(
                f"chan_len={self.chan_len} must be in [1, cp_len={self.cp_len}]"
            )

    @property
    def n_periods(self) -> int:
        """Q: number of length-P periods in one training frame."""
        return self.n_subcarriers // self.pilot_len

    @property
    def shift_stride(self) -> int:
        """Per-antenna cyclic shift applied to the generator sequence."""
        return self.pilot_len // self.n_tx

    @property
    def cfo_half_range(self) -> float:
        """CFO is identifiable on the open interval (-Q/2, Q/2)."""
        return self.n_periods / 2.0

    def lattice(self, antenna: int) -> np.ndarray:
        """Subcarrier indices of the given antenna's pilot comb."""
        q = self.n_periods
        return self.offsets[antenna] + q * np.arange(self.pilot_len)


def reference_config(offsets: tuple[int, ...] = OFFSETS_B) -> SystemConfig:
    """The 1024-subcarrier wideband configuration used by the shipped presets."""
    return SystemConfig(
        n_subcarriers=1024,
        pilot_len=64,
        n_tx=3,
        n_rx=2,
        cp_len=80,
        chan_len=75,
        offsets=offsets,
    )


def chu_sequence(length: int, root: int = 1) -> np.ndarray:
    """Constant-modulus quadratic-phase sequence: element p = exp(j*pi*root*p^2/length).

    For even lengths with gcd(root, length) = 1 the periodic autocorrelation
    vanishes at every nonzero lag, which is the property the whole training
    design rests on.  Odd lengths lose that property for the quadratic form,
    so they are rejected.
    """
    if length < 2 or length % 2 != 0:
        raise ConfigError(f"generator sequence length must be even and >= 2, got {length}")
    if math.gcd(root, length) != 1:
        raise ConfigError(f"root={root} must be coprime with length={length}")
    p = np.arange(length)
    return np.exp(1j * np.pi * root * p * p / length)


@dataclass(frozen=True)
class TrainingSet:
    """Per-antenna training in its three equivalent layouts.

    freq_pilots:    (n_tx, P) pilot values on each antenna's comb (cbts only
                    meaningful per-comb; for rs the full grid is the design).
    grid_vectors:   (n_tx, N) full-grid frequency-domain training.
    time_sequences: (n_tx, N) time-domain frame before the cyclic prefix,
                    scaled as sqrt(N) times the unitary inverse DFT of the
                    grid vector.
    """

    kind: str
    freq_pilots: np.ndarray = field(repr=False)
    grid_vectors: np.ndarray = field(repr=False)
    time_sequences: np.ndarray = field(repr=False)


def build_training(cfg: SystemConfig, kind: str = "cbts",
                   rng: RandomSource | None = None) -> TrainingSet:
    """Construct a TrainingSet of the requested kind.

    cbts: antenna mu transmits sqrt(Q/n_tx) * F_P applied to the generator
    sequence cyclically shifted by mu * shift_stride, placed on its comb.
    Per-antenna grid energy is N/n_tx and combs are disjoint.

    rs: i.i.d. uniform random phases, unit modulus, on all N subcarriers,
    scaled to the same per-antenna energy N/n_tx.  Requires `rng`.
    """
    n, p, q = cfg.n_subcarriers, cfg.pilot_len, cfg.n_periods
    pilots = np.zeros((cfg.n_tx, p), dtype=complex)
    grid = np.zeros((cfg.n_tx, n), dtype=complex)
    if kind == "cbts":
        s = chu_sequence(p, cfg.chu_root)
        for mu in range(cfg.n_tx):
            pilots[mu] = np.sqrt(q / cfg.n_tx) * dft(cyclic_shift(s, mu * cfg.shift_stride))
            grid[mu, cfg.lattice(mu)] = pilots[mu]
    elif kind == "rs":
        if rng is None:
            raise ConfigError("rs training needs a RandomSource")
        gen = rng.generator()
        for mu in range(cfg.n_tx):
            grid[mu] = np.exp(1j * gen.uniform(0.0, 2 * np.pi, n)) / np.sqrt(cfg.n_tx)
            pilots[mu] = grid[mu, cfg.lattice(mu)]
    else:
        raise ConfigError(f"unknown training kind {kind!r}")
    time = np.vstack([np.sqrt(n) * dft(grid[mu], inverse=True) for mu in range(cfg.n_tx)])
    return TrainingSet(kind=kind, freq_pilots=pilots, grid_vectors=grid, time_sequences=time)


def shift_correlation(ts: TrainingSet, cfg: SystemConfig,
                      lag_a: int, lag_b: int, ant_a: int, ant_b: int) -> complex:
    """Correlation between tap-shifted period sequences of two antennas.

    Recovers each antenna's length-P period sequence from its pilots, applies
    the extra cyclic shifts `lag_a`/`lag_b` (channel tap positions), and takes
    the inner product under the inter-comb phase ramp.  For the cbts kind this
    is P at (ant_a == ant_b, lag_a == lag_b), exactly zero at other lags of
    the same antenna, and small across antennas: the quantity that justifies
    treating the stacked-signal sample correlation as (scaled) identity.
    """
    q = cfg.n_periods
    base_a = np.sqrt(cfg.n_tx / q) * dft(ts.freq_pilots[ant_a], inverse=True)
    base_b = np.sqrt(cfg.n_tx / q) * dft(ts.freq_pilots[ant_b], inverse=True)
    # inter-comb spacing is fractional on the period clock: (i_a - i_b)/Q
    # cycles per period, i.e. (i_a - i_b)/N cycles per sample
    ramp = phase_ramp(cfg.pilot_len, cfg.offsets[ant_a] - cfg.offsets[ant_b],
                      cfg.n_subcarriers)
    return complex(np.sum(cyclic_shift(base_a, lag_a) * ramp
                          * np.conj(cyclic_shift(base_b, lag_b))))


def export_training_csv(ts: TrainingSet, cfg: SystemConfig, fh: IO[str]) -> None:
    """Write the full-grid training to CSV: one row per (subcarrier, antenna)."""
    writer = csv.writer(fh)
    writer.writerow(["subcarrier", "antenna", "real", "imag"])
    for k in range(cfg.n_subcarriers):
        for mu in range(cfg.n_tx):
            v = ts.grid_vectors[mu, k]
            writer.writerow([k, mu, f"{v.real:.12g}", f"{v.imag:.12g}"])
