"""Seeded experiment campaigns with deterministic CSV output.

Randomness is budgeted per purpose on fixed stream ids, so a campaign is a
pure function of (spec, seed): channel and offset draws live on one stream
per trial, noise on one stream per (SNR point, trial), the random-training
draw and the bound's channel draws on reserved ranges.  Results are reduced
in trial order, so thread count cannot change the output bytes.

Runtime measurements are confined to the bench command; the campaign CSVs
leave the runtime column empty to keep their bytes reproducible.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import IO, Iterable

import numpy as np

from . import analysis, estimator
from .channel import ChannelProfile, draw_channel, reference_profile, transmit_receive
from .numerics import RandomSource
from .training import (OFFSETS_A, OFFSETS_B, ConfigError, SystemConfig,
                       TrainingSet, build_training, reference_config)

CSV_HEADER = ("estimator,snr_db,iota,trials,empirical_mse,analytic_mse,"
              "emcb,mean_runtime_us,degenerate_count")

# Stream-id layout (see module docstring): keep these ranges disjoint.
STREAM_RS_TRAINING = 1
STREAM_EMCB_BASE = 1 << 40
STREAM_BENCH = 1 << 41


def _trial_stream(trial: int) -> int:
    return 2 + 2 * trial


def _noise_stream(snr_index: int, trials: int, trial: int) -> int:
    return 3 + 2 * (snr_index * trials + trial)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a campaign needs; serialisable to/from JSON."""

    config: SystemConfig
    profile: ChannelProfile
    estimators: tuple[str, ...]
    snr_points_db: tuple[float, ...]
    trials: int
    seed: int
    epsilon_mode: str = "uniform"   # "uniform" | "fixed"
    epsilon_value: float = 0.0
    noiseless: bool = False
    emcb_draws: int = 500

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.epsilon_mode not in ("uniform", "fixed"):
            raise ConfigError(f"unknown epsilon_mode {self.epsilon_mode!r}")
        if not self.estimators:
            raise ConfigError("at least one estimator id is required")
        for est_id in self.estimators:
            parse_estimator_id(est_id, self.config)


@dataclass(frozen=True)
class ResultRow:
    estimator: str
    snr_db: float
    iota: int | None
    trials: int
    empirical_mse: float | None
    analytic_mse: float | None
    emcb: float | None
    mean_runtime_us: float | None
    degenerate_count: int


@dataclass(frozen=True)
class BenchRow:
    estimator: str
    repetitions: int
    median_us: float
    mean_us: float


def parse_estimator_id(est_id: str, cfg: SystemConfig):
    """'simplified:7' | 'simplified_rs:7' | 'ml_grid' | 'emcb' -> (method, kind, index)."""
    name, _, arg = est_id.partition(":")
    if name == "ml_grid":
        return ("ml_grid", "cbts", None)
    if name == "emcb":
        return ("emcb", "cbts", None)
    if name in ("simplified", "simplified_rs"):
        if not arg:
            raise ConfigError(f"{name} needs a diagonal index, e.g. '{name}:7'")
        try:
            idx = int(arg)
        except ValueError:
            raise ConfigError(f"diagonal index must be an integer, got {arg!r}") from None
        if not 1 <= idx <= cfg.n_periods - 1:
            raise ConfigError(
                f"diagonal index {idx} out of range [1, {cfg.n_periods - 1}]"
            )
        return ("simplified", "cbts" if name == "simplified" else "rs", idx)
    raise ConfigError(f"unknown estimator id {est_id!r}")


def _wrap_error(err: float, n_periods: int) -> float:
    """Circular difference: the CFO is only identifiable modulo Q."""
    half = n_periods / 2.0
    return (err + half) % n_periods - half


def _thread_count() -> int:
    raw = os.environ.get("CFOLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_in_order(fn, items: Iterable):
    """Map preserving order; threads only when CFOLAB_THREADS > 1."""
    items = list(items)
    workers = _thread_count()
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _trainings_for(spec: ExperimentSpec) -> dict[str, TrainingSet]:
    kinds = {parse_estimator_id(e, spec.config)[1]
             for e in spec.estimators if not e.startswith("emcb")}
    out: dict[str, TrainingSet] = {}
    for kind in sorted(kinds):
        rng = RandomSource(spec.seed, STREAM_RS_TRAINING) if kind == "rs" else None
        out[kind] = build_training(spec.config, kind, rng)
    return out


def _draw_trial(spec: ExperimentSpec, trainings: dict[str, TrainingSet], trial: int):
    """One trial's true offset and noiseless frame per training kind.

    Channel and offset share the trial's stream: one generator, channel taps
    first, then the offset draw.
    """
    cfg = spec.config
    gen = RandomSource(spec.seed, _trial_stream(trial)).generator()
    ch = draw_channel(spec.profile, cfg, gen)
    if spec.epsilon_mode == "fixed":
        cfo = float(spec.epsilon_value)
    else:
        half = cfg.cfo_half_range
        # uniform() is closed at the lower end; nudge the endpoint inward
        cfo = float(np.nextafter(gen.uniform(-half, half), 0.0))
    frames = {kind: transmit_receive(ts, ch, cfo, 0.0, cfg)
              for kind, ts in trainings.items()}
    return cfo, frames


def run_mse_vs_snr(spec: ExperimentSpec) -> list[ResultRow]:
    """Per (estimator, SNR point): seeded trials, squared circular error averaged.

    All estimators at one SNR point see the same channels, offsets and (up to
    the per-kind noise scaling) the same noise draws, so comparisons between
    them are paired.  Degenerate-diagonal failures are counted per row and
    excluded from the average.
    """
    cfg = spec.config
    trainings = _trainings_for(spec)
    parsed = [(e, *parse_estimator_id(e, cfg)) for e in spec.estimators]
    mc_ids = [p for p in parsed if p[1] != "emcb"]

    drawn = _map_in_order(lambda t: _draw_trial(spec, trainings, t),
                          range(spec.trials))
    mean_power = {kind: float(np.mean([d[1][kind].stacked_power * cfg.n_tx
                                       for d in drawn]))
                  for kind in trainings}

    rows: list[ResultRow] = []
    for s_idx, snr_db in enumerate(spec.snr_points_db):
        snr = 10.0 ** (snr_db / 10.0)
        noise_var = {k: (0.0 if spec.noiseless else mean_power[k] / snr)
                     for k in trainings}

        def one_trial(trial: int, _s=s_idx, _nv=noise_var):
            cfo, frames = drawn[trial]
            gen = RandomSource(spec.seed,
                               _noise_stream(_s, spec.trials, trial)).generator()
            unit = (gen.standard_normal((cfg.n_rx, cfg.n_subcarriers))
                    + 1j * gen.standard_normal((cfg.n_rx, cfg.n_subcarriers))) / np.sqrt(2.0)
            stacked = {}
            for kind, frame in frames.items():
                noisy = frame.samples + np.sqrt(_nv[kind]) * unit
                stacked[kind] = estimator.stack(
                    replace(frame, samples=noisy, noise_var=_nv[kind]), cfg)
            out = {}
            for est_id, method, kind, idx in mc_ids:
                try:
                    if method == "simplified":
                        res = estimator.estimate_simplified(
                            stacked[kind], estimator.EstimatorParams(idx), cfg)
                    else:
                        res = estimator.estimate_ml_grid(stacked[kind], cfg)
                    out[est_id] = _wrap_error(res.value - cfo, cfg.n_periods) ** 2
                except estimator.DegenerateDiagonalError:
                    out[est_id] = None
            return out

        per_trial = _map_in_order(one_trial, range(spec.trials))
        for est_id, method, kind, idx in mc_ids:
            errs = [r[est_id] for r in per_trial if r[est_id] is not None]
            degenerate = spec.trials - len(errs)
            analytic = None
            if method == "simplified" and kind == "cbts" and not spec.noiseless:
                gamma = snr / cfg.n_tx
                try:
                    analytic = analysis.predicted_mse(gamma, idx, cfg)
                except estimator.DegenerateDiagonalError:
                    analytic = None
            rows.append(ResultRow(
                estimator=est_id, snr_db=float(snr_db), iota=idx,
                trials=spec.trials,
                empirical_mse=float(np.mean(errs)) if errs else None,
                analytic_mse=analytic, emcb=None, mean_runtime_us=None,
                degenerate_count=degenerate))

    if any(p[1] == "emcb" for p in parsed):
        rows.extend(run_emcb(spec))
    return rows


def run_mse_vs_iota(spec: ExperimentSpec, iota_list: Iterable[int]) -> list[ResultRow]:
    """Sweep the simplified estimator's diagonal index on a common frame set."""
    ids = tuple(f"simplified:{i}" for i in iota_list)
    return run_mse_vs_snr(replace(spec, estimators=ids))


def run_emcb(spec: ExperimentSpec) -> list[ResultRow]:
    """Bound rows matching the campaign CSV schema (empirical column empty)."""
    result = analysis.emcb(spec.config, spec.profile, spec.snr_points_db,
                           spec.emcb_draws, RandomSource(spec.seed, STREAM_EMCB_BASE))
    return [ResultRow(estimator="emcb", snr_db=db, iota=None,
                      trials=spec.emcb_draws, empirical_mse=None,
                      analytic_mse=None, emcb=val, mean_runtime_us=None,
                      degenerate_count=0)
            for db, val in zip(result.snr_db, result.values)]


def run_bench(spec: ExperimentSpec, repetitions: int = 200) -> list[BenchRow]:
    """Wall-clock comparison of the estimators on one shared noisy frame."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = spec.config
    trainings = _trainings_for(spec)
    rng = RandomSource(spec.seed, STREAM_BENCH)
    ch = draw_channel(spec.profile, cfg, rng)
    cfo = 2.3 if cfg.cfo_half_range > 2.3 else 0.3
    snr_db = spec.snr_points_db[0] if spec.snr_points_db else 15.0
    frames = {}
    for kind, ts in trainings.items():
        clean = transmit_receive(ts, ch, cfo, 0.0, cfg)
        nv = 0.0 if spec.noiseless else \
            clean.stacked_power * cfg.n_tx / 10.0 ** (snr_db / 10.0)
        frames[kind] = transmit_receive(ts, ch, cfo, nv, cfg,
                                        rng.stream(STREAM_BENCH + 1))
    stacked = {kind: estimator.stack(frame, cfg) for kind, frame in frames.items()}

    rows = []
    for est_id in spec.estimators:
        method, kind, idx = parse_estimator_id(est_id, cfg)
        if method == "emcb":
            continue
        if method == "simplified":
            params = estimator.EstimatorParams(idx)
            call = lambda sf=stacked[kind], p=params: estimator.estimate_simplified(sf, p, cfg)
        else:
            call = lambda sf=stacked[kind]: estimator.estimate_ml_grid(sf, cfg)
        call()  # warm up
        times = np.empty(repetitions)
        for r in range(repetitions):
            t0 = time.perf_counter()
            call()
            times[r] = time.perf_counter() - t0
        rows.append(BenchRow(estimator=est_id, repetitions=repetitions,
                             median_us=float(np.median(times) * 1e6),
                             mean_us=float(np.mean(times) * 1e6)))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(rows: list[ResultRow], fh: IO[str]) -> None:
    fh.write(CSV_HEADER + "\n")
    for r in rows:
        fh.write(",".join(_fmt(v) for v in (
            r.estimator, r.snr_db, r.iota, r.trials, r.empirical_mse,
            r.analytic_mse, r.emcb, r.mean_runtime_us, r.degenerate_count)) + "\n")


def rows_to_csv(rows: list[ResultRow]) -> str:
    import io

    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Preset and JSON plumbing

PRESET_NAMES = ("paper-fig1", "paper-fig2", "paper-fig3")


def preset_spec(name: str, seed: int = 42) -> ExperimentSpec:
    """Shipped reference campaigns.

    paper-fig1 / paper-fig2: diagonal-index sweeps at 10/15/20 dB for the two
    reference offset sets.  paper-fig3: MSE vs SNR for the structured and
    random designs plus the grid-search baseline and the bound.
    """
    if name == "paper-fig1":
        return ExperimentSpec(
            config=reference_config(OFFSETS_A), profile=reference_profile(),
            estimators=("simplified:8",), snr_points_db=(10.0, 15.0, 20.0),
            trials=2000, seed=seed)
    if name == "paper-fig2":
        return ExperimentSpec(
            config=reference_config(OFFSETS_B), profile=reference_profile(),
            estimators=("simplified:7",), snr_points_db=(10.0, 15.0, 20.0),
            trials=2000, seed=seed)
    if name == "paper-fig3":
        return ExperimentSpec(
            config=reference_config(OFFSETS_B), profile=reference_profile(),
            estimators=("simplified:7", "simplified_rs:7", "ml_grid", "emcb"),
            snr_points_db=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0),
            trials=2000, seed=seed)
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def spec_from_json(data: dict) -> ExperimentSpec:
    """Build a spec from a JSON-shaped dict; `preset` expands first, every
    other key overrides the expanded values."""
    data = dict(data)
    preset = data.pop("preset", None)
    base = preset_spec(preset, seed=data.get("seed", 42)) if preset else None

    if "config" in data:
        cfg_d = dict(data.pop("config"))
        if "offsets" in cfg_d:
            cfg_d["offsets"] = tuple(cfg_d["offsets"])
        config = SystemConfig(**cfg_d)
    elif base:
        config = base.config
    else:
        raise ConfigError("config section (or preset) is required")

    if "profile" in data:
        p = data.pop("profile")
        profile = ChannelProfile(delays=tuple(p["delays"]),
                                 powers_db=tuple(p["powers_db"]))
    elif base:
        profile = base.profile
    else:
        raise ConfigError("profile section (or preset) is required")

    def pick(key, default):
        if key in data:
            return data.pop(key)
        return getattr(base, key) if base else default

    spec = ExperimentSpec(
        config=config, profile=profile,
        estimators=tuple(pick("estimators", ("simplified:1",))),
        snr_points_db=tuple(float(v) for v in np.atleast_1d(pick("snr_points_db", (15.0,)))),
        trials=int(pick("trials", 1000)),
        seed=int(pick("seed", 42)),
        epsilon_mode=str(pick("epsilon_mode", "uniform")),
        epsilon_value=float(pick("epsilon_value", 0.0)),
        noiseless=bool(pick("noiseless", False)),
        emcb_draws=int(pick("emcb_draws", 500)),
    )
    data.pop("iotas", None)  # consumed by the CLI, not the spec
    if data:
        raise ConfigError(f"unknown config keys: {sorted(data)}")
    return spec


def load_spec(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))
