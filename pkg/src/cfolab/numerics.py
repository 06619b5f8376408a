"""Complex-vector primitives shared by every other module.

Unitary DFT convention throughout: the forward transform scales by 1/sqrt(N),
the inverse by sqrt(N), so both directions preserve the squared norm.  All
model scale factors are written explicitly at the call sites instead of being
absorbed into the transforms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


def dft(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary DFT of a 1-D complex vector (conjugate transpose if inverse)."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n < 1:
        raise ValueError("dft requires length >= 1")
    if inverse:
        return np.fft.ifft(x) * np.sqrt(n)
    return np.fft.fft(x) / np.sqrt(n)


def dft_matrix(n: int) -> np.ndarray:
    """Dense n-by-n unitary DFT matrix, entry (k, m) = exp(-j*2*pi*k*m/n)/sqrt(n)."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def phase_ramp(length: int, cycles: float, n: int) -> np.ndarray:
    """Progressive phase vector: element m equals exp(j*2*pi*cycles*m/n).

    `cycles` is measured in subcarrier spacings of an n-point grid; `length`
    may differ from `n` (e.g. a pilot-length ramp on the full-grid clock).
    """
    if length < 1 or n < 1:
        raise ValueError("phase_ramp requires length >= 1 and n >= 1")
    return np.exp(2j * np.pi * cycles * np.arange(length) / n)


def cyclic_shift(x: np.ndarray, m: int) -> np.ndarray:
    """Cyclic down-shift by m positions: output[k] = x[(k - m) mod len(x)]."""
    return np.roll(np.asarray(x), m)


def hermitian_defect(a: np.ndarray) -> float:
    """max|A - A^H| normalised by max|A|; zero for an exactly Hermitian matrix."""
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T))) / scale


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian draws with the given total variance.

    Real and imaginary parts are independent N(0, variance/2).
    """
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class RandomSource:
    """Deterministic, stream-addressable randomness.

    Identical (seed, stream_id) pairs reproduce bit-identical draws; distinct
    stream ids give statistically independent streams.  Parallel workers must
    each own their stream: a RandomSource is a factory, the generators it
    hands out are single-owner.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)

    def stream(self, stream_id: int) -> "RandomSource":
        """Sibling source on a different stream of the same seed."""
        return replace(self, stream_id=stream_id)
