"""Analytical MSE of the simplified estimator and the EMCB benchmark.

The estimator's error comes from noise perturbing the two diagonal sums that
form its phase ratio.  Propagating first/second noise moments through that
ratio gives a closed-form MSE in terms of the per-row SNR gamma, the system
dimensions, and the comb offsets.  The prediction assumes gamma >> 1 (cross
terms of the perturbation are dropped) and the structured-training
approximation, so expect it to drift from simulation below roughly 5 dB.

The mirrored-diagonal construction makes the estimator's output for diagonal
index i identical to that for Q - i (the phase ratio is the same), so every
quantity here is symmetric under i <-> Q - i.

The EMCB averages the deterministic single-snapshot Cramer-Rao bound over
channel realizations; it benchmarks how close the estimator gets to the best
any unbiased estimator could do on the same frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelProfile, draw_channel, model_matrix
from .estimator import DegenerateDiagonalError
from .numerics import RandomSource
from .training import ConfigError, SystemConfig, TrainingSet, build_training

# |sum of comb phasors| below this is treated as a blind diagonal.
DEGENERATE_PHASE_SUM = 1e-9


@dataclass(frozen=True)
class AnalysisPoint:
    """Predicted error budget of the simplified estimator at one (gamma, index)."""

    gamma: float
    diag_index: int
    cross_term: float
    var_zeta: float
    var_eta: float
    var_xi: float
    mse: float


@dataclass(frozen=True)
class EmcbResult:
    snr_db: tuple[float, ...]
    values: tuple[float, ...]
    n_draws: int
    seed: int


def _phase_sum(cfg: SystemConfig, power: int) -> complex:
    """Sum over antennas of exp(j*2*pi*offset*power/Q)."""
    offs = np.asarray(cfg.offsets, dtype=float)
    return complex(np.sum(np.exp(2j * np.pi * offs * power / cfg.n_periods)))


def _check_index(diag_index: int, cfg: SystemConfig) -> complex:
    q = cfg.n_periods
    if not 1 <= diag_index <= q - 1:
        raise ValueError(f"diag_index must be in [1, {q - 1}], got {diag_index}")
    s = _phase_sum(cfg, diag_index)
    if abs(s) < DEGENERATE_PHASE_SUM:
        raise DegenerateDiagonalError(
            f"comb phase sum vanishes at diag_index={diag_index}; "
            "this diagonal is blind for these offsets"
        )
    return s


def cross_term(diag_index: int, cfg: SystemConfig) -> float:
    """Offset-dependent cross-term weight in the MSE numerator.

    2 * min(i, Q-i) * Re{ S(2i) * S(-i)^2 } / |S(i)|^2 with S(k) the comb
    phase sum.  Symmetric under i <-> Q-i, matching the estimator's exact
    mirror symmetry; collapses to 2*min(i, Q-i) for a single antenna.
    """
    s1 = _check_index(diag_index, cfg)
    q = cfg.n_periods
    s2 = _phase_sum(cfg, 2 * diag_index)
    sm = _phase_sum(cfg, -diag_index)
    return float(2.0 * min(diag_index, q - diag_index)
                 * np.real(s2 * sm * sm) / abs(s1) ** 2)


def analysis_point(gamma: float, diag_index: int, cfg: SystemConfig) -> AnalysisPoint:
    """Full perturbation budget at one operating point.

    var_zeta / var_eta are the variances of the two relative diagonal-sum
    perturbations; var_xi combines them with the cross term and scales to
    the CFO MSE by 1/(8*pi^2).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s1 = _check_index(diag_index, cfg)
    q, p = cfg.n_periods, cfg.pilot_len
    nt, nr = cfg.n_tx, cfg.n_rx
    base = (2.0 * nt / gamma + 1.0 / gamma ** 2) / (nr * p * abs(s1) ** 2)
    var_zeta = base / (q - diag_index)
    var_eta = base / diag_index
    rho = cross_term(diag_index, cfg)
    var_xi = ((2.0 * (nt * q + rho) / gamma + q / gamma ** 2)
              / (nr * p * diag_index * (q - diag_index) * abs(s1) ** 2))
    return AnalysisPoint(gamma=gamma, diag_index=diag_index, cross_term=rho,
                         var_zeta=var_zeta, var_eta=var_eta, var_xi=var_xi,
                         mse=var_xi / (8.0 * np.pi ** 2))


def predicted_mse(gamma: float, diag_index: int, cfg: SystemConfig) -> float:
    """Closed-form MSE of the simplified estimator, in squared subcarrier spacings."""
    return analysis_point(gamma, diag_index, cfg).mse


def optimal_diag_indices(gamma: float, cfg: SystemConfig,
                         band: float = 0.2) -> tuple[int, ...]:
    """Diagonal indices whose predicted MSE is within `band` of the minimum.

    Blind (degenerate) indices are excluded from the search rather than
    raised.  The default band reports the near-optimal plateau as a set -
    the members are typically mirror pairs plus Q/2 and sit well inside a
    factor of two of each other, while the next tier is a factor ~2 away.
    Pass band=0.0 (or tiny) for the strict minimiser set.
    """
    q = cfg.n_periods
    values: dict[int, float] = {}
    for i in range(1, q):
        try:
            values[i] = predicted_mse(gamma, i, cfg)
        except DegenerateDiagonalError:
            continue
    if not values:
        raise DegenerateDiagonalError("every diagonal index is blind for these offsets")
    best = min(values.values())
    cutoff = best * (1.0 + band) * (1.0 + 1e-9)
    return tuple(sorted(i for i, v in values.items() if v <= cutoff))


def projection_complement(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the complement of the column space.

    Equals I - basis (basis^H basis)^-1 basis^H when the basis has full
    column rank, but is computed rank-revealing: with more taps than comb
    samples per antenna (chan_len > pilot_len, as in the reference preset)
    the design matrix is structurally rank deficient and the inverse form
    does not exist, while the column-space projector still does.
    """
    u, sv, _ = np.linalg.svd(basis, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise ConfigError("training design matrix is zero")
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    ur = u[:, :rank]
    return np.eye(basis.shape[0]) - ur @ ur.conj().T


def emcb(cfg: SystemConfig, profile: ChannelProfile, snr_db, n_draws: int,
         rng: RandomSource, ts: TrainingSet | None = None) -> EmcbResult:
    """Extended Miller-Chang bound: snapshot CRB averaged over channel draws.

    The bound's block structure over receive antennas lets the projector be
    formed once from the N x (n_tx*L) model matrix instead of the full
    Kronecker-expanded system; each draw then costs one small quadratic form.
    Noise variance per SNR point is calibrated from the measured mean signal
    power of the same draws, mirroring the Monte Carlo harness convention.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    snr_db = tuple(float(v) for v in np.atleast_1d(snr_db))
    if ts is None:
        ts = build_training(cfg, "cbts")
    s = model_matrix(ts, cfg)
    n, ng = cfg.n_subcarriers, cfg.cp_len
    complement = projection_complement(s)
    ramp = np.arange(ng, ng + n, dtype=float)
    weighted = ramp[:, None] * s
    core = weighted.conj().T @ complement @ weighted  # (n_tx*L) x (n_tx*L)

    quad = np.empty(n_draws)
    power = np.empty(n_draws)
    for k in range(n_draws):
        ch = draw_channel(profile, cfg, rng.stream(rng.stream_id + k))
        acc = 0.0
        sig = 0.0
        for nu in range(cfg.n_rx):
            h = ch.stacked(nu)
            acc += float(np.real(h.conj() @ (core @ h)))
            sig += float(np.linalg.norm(s @ h) ** 2)
        if acc <= 0.0:
            raise ConfigError(
                "bound denominator vanished: this training cannot resolve the offset"
            )
        quad[k] = acc
        power[k] = sig / cfg.n_rx  # mean |sample|^2: N * ||Sh||^2 / (n_rx * N)
    mean_power = float(power.mean())

    values = []
    for db in snr_db:
        noise_var = mean_power / 10.0 ** (db / 10.0)
        values.append(float(np.mean(n * noise_var / (8.0 * np.pi ** 2 * quad))))
    return EmcbResult(snr_db=snr_db, values=tuple(values),
                      n_draws=n_draws, seed=rng.seed)
