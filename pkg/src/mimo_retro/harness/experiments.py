"""
Experiment dispatch and Monte Carlo orchestration.

Work is split into units that are pure functions of the configuration
and a unit key:

* link-level schemes: ``(scheme, rho, snr, chunk)`` with a fixed chunk
  size, so the set of random streams does not depend on the worker count;
* scheduler schemes: ``(scheme, snr)``, one sequential frame loop each.

Random streams are keyed on the scheme, rho and chunk but not on the
SNR, so all points of a curve share channel draws (common random
numbers), which keeps slope estimates stable.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Optional

import numpy as np

from .. import lzfb, mat
from ..channel import make_rng, rho_step_for_delay
from ..csi import TrainingConfig
from ..sched import SchedulerConfig, mode_dims, simulate
from .config import LINK_SCHEMES, SCHED_SCHEMES, ExperimentConfig, config_from_dict
from .stats import CurvePoint, RateCurve, snr_to_power, summarize

__all__ = ["CHUNK", "WORKERS_ENV", "run_experiment", "resolve_workers", "link_samples", "sched_samples"]

log = logging.getLogger(__name__)

CHUNK = 5000
WORKERS_ENV = "MIMO_RETRO_WORKERS"


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: the environment override wins, then ``requested``, then 1."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    else:
        n = 1 if requested is None else requested
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    return n


def _training(cfg: ExperimentConfig, P: float) -> TrainingConfig:
    return TrainingConfig(cfg.beta1, cfg.beta_f, P, P * cfg.P1_over_P, 1.0, 2)


def link_samples(cfg: ExperimentConfig, scheme: str, rho: float, snr_dB: float,
                 chunk: int, n: int) -> np.ndarray:
    """Per-realization sum rates of a link-level scheme for one chunk."""
    P = snr_to_power(snr_dB)
    rng = make_rng(cfg.seed, scheme, repr(float(rho)), chunk)
    rho_step = rho_step_for_delay(rho, cfg.slot_spacing)
    if scheme in ("mat_perfect", "mat_trained"):
        tc = _training(cfg, P) if scheme == "mat_trained" else None
        rec = mat.sample_session(2, rng, (n,), cfg=tc, rho_step=rho_step,
                                 slot_spacing=cfg.slot_spacing)
        if tc is None:
            return mat.perfect_rate(rec, 1, P) + mat.perfect_rate(rec, 2, P)
        return mat.trained_rate(rec, 1) + mat.trained_rate(rec, 2)
    if scheme in ("lzfb_perfect", "lzfb_trained"):
        tc = _training(cfg, P) if scheme == "lzfb_trained" else None
        return lzfb.simulate_lzfb(2, rng, (n,), P, rho_step=rho_step, delay=cfg.slot_spacing, cfg=tc)
    raise ValueError(f"not a link-level scheme: {scheme!r}")


def sched_samples(cfg: ExperimentConfig, scheme: str, snr_dB: float) -> np.ndarray:
    """Per-packet rate contributions of a scheduler scheme at one SNR."""
    mode, scheduled = SCHED_SCHEMES[scheme]
    L = cfg.L if scheduled else mode_dims(mode)[0]
    sc = SchedulerConfig(mode, L, snr_to_power(snr_dB), 1.0, cfg.N, cfg.f_samples,
                         cfg.initial_backlog)
    return simulate(sc, make_rng(cfg.seed, scheme), cfg.samples).samples


def _run_unit(unit: tuple[dict[str, Any], str, Optional[float], float, int, int]) -> np.ndarray:
    cfg_dict, scheme, rho, snr, chunk, n = unit
    cfg = config_from_dict(cfg_dict)
    if scheme in LINK_SCHEMES:
        return link_samples(cfg, scheme, rho, snr, chunk, n)
    return sched_samples(cfg, scheme, snr)


def _units(cfg: ExperimentConfig) -> list[tuple]:
    d = cfg.to_dict()
    units = []
    for scheme in cfg.resolved_schemes():
        rhos = cfg.rho_list if scheme in LINK_SCHEMES else [None]
        for rho in rhos:
            for snr in cfg.snr_grid_dB:
                if scheme in LINK_SCHEMES:
                    for c, start in enumerate(range(0, cfg.samples, CHUNK)):
                        units.append((d, scheme, rho, snr, c, min(CHUNK, cfg.samples - start)))
                else:
                    units.append((d, scheme, rho, snr, 0, cfg.samples))
    return units


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> list[RateCurve]:
    """
    Evaluate every (scheme, rho) curve of ``cfg`` over its SNR grid.

    Output depends only on the configuration (including its seed), not on
    ``workers``.
    """
    cfg.validate()
    workers = resolve_workers(workers)
    units = _units(cfg)
    log.info("running %s: %d work units on %d worker(s)", cfg.experiment, len(units), workers)
    if workers == 1:
        results = [_run_unit(u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units, chunksize=1))
    grouped: dict[tuple, list[np.ndarray]] = {}
    for u, r in zip(units, results):
        grouped.setdefault((u[1], u[2], u[3]), []).append(np.asarray(r, dtype=float))
    fp = cfg.fingerprint()
    curves = []
    for scheme in cfg.resolved_schemes():
        rhos = cfg.rho_list if scheme in LINK_SCHEMES else [None]
        for rho in rhos:
            pts = []
            for snr in cfg.snr_grid_dB:
                x = np.concatenate(grouped[(scheme, rho, snr)])
                mean, ci = summarize(x)
                pts.append(CurvePoint(float(snr), mean, ci, int(x.size)))
            curves.append(RateCurve(scheme, rho, pts, fp))
    return curves
