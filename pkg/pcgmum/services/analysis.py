import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import entropy

from pcgmum.models.schemas import (
    BinMask,
    EntropyTables,
    GridSpec,
    MumConfig,
    OutcomeDistribution,
    PhysicalScale,
    SweepMarker,
    SweepResult,
    SweepSample,
)
from pcgmum.services import cvsim
from pcgmum.services.mum_config import beam_width as physical_beam_width
from pcgmum.services.mum_config import from_physical
from pcgmum.settings import get_settings
from pcgmum.utils.errors import DomainError, PcgError

LOG_BASE = 2
TABLE_BEAM_WIDTH = 1.0


def shannon_entropy(dist: OutcomeDistribution) -> float:
    """Shannon entropy in bits; 0 log 0 = 0"""
    return float(entropy(dist.array, base=LOG_BASE))


def kl_uniform(dist: OutcomeDistribution) -> float:
    """D(P || U) in bits, U the uniform distribution over the d outcomes"""
    uniform = np.full(dist.d, 1.0 / dist.d)
    return float(entropy(dist.array, qk=uniform, base=LOG_BASE))


def apply_background(dist: OutcomeDistribution, noise_fraction: float) -> OutcomeDistribution:
    """(1 - f) p + f / d"""
    if not 0.0 <= noise_fraction <= 1.0:
        raise DomainError(f"noise fraction must lie in [0, 1], got {noise_fraction}")
    mixed = (1.0 - noise_fraction) * dist.array + noise_fraction / dist.d
    return OutcomeDistribution.from_weights(mixed, truncation_loss=dist.truncation_loss)


def leak_to_mixing(leak: float, d: int) -> float:
    """Mixing weight that moves `leak` of the probability off a certain outcome"""
    weight = leak * d / (d - 1)
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"background {leak} exceeds the maximum {(d - 1) / d:.4f} for d={d}")
    return weight


def experiment_beam_width(scale: Optional[PhysicalScale] = None) -> float:
    settings = get_settings()
    return physical_beam_width(scale or PhysicalScale(), settings.beam_radius_mm * 1e-3)


def marker_period(config: MumConfig, j: int, k: int, m: int) -> float:
    """Dimensionless period of direction k that makes pair (j, k) satisfy the
    period relation with multiplier m"""
    s = abs(math.sin(config.angles[j] - config.angles[k]))
    return 2 * math.pi * config.d * s / (m * config.periods[j])


def entropy_sweep(
    config: MumConfig,
    j: int,
    k: int,
    u: int = 0,
    start_px: float = 20.0,
    stop_px: float = 200.0,
    step_px: float = 1.0,
    scale: Optional[PhysicalScale] = None,
    grid: Optional[GridSpec] = None,
    beam_width: Optional[float] = None,
) -> SweepResult:
    """Entropy of measurement k versus its physical period, preparation (j, u) fixed.

    The period of direction k is overridden per sample; the rotated density is
    computed once and integrated against each trial mask.
    """
    scale = scale or PhysicalScale()
    grid = grid or cvsim.default_grid()
    if step_px <= 0 or stop_px < start_px:
        raise DomainError(f"invalid sweep range {start_px}..{stop_px} step {step_px}")
    width = beam_width if beam_width is not None else experiment_beam_width(scale)

    prepared = cvsim.prepare(cvsim.gaussian_state(grid, width), config, j, u)
    density = cvsim.rotated_density(prepared, config.angles[k] - config.angles[j])
    q = prepared.q

    def entropy_at(period_px: float) -> float:
        mask = BinMask(
            period=from_physical(period_px, scale), bins=config.d, offset=config.offsets[k]
        )
        return shannon_entropy(cvsim.bin_probabilities(density, q, prepared.spacing, mask))

    samples: List[SweepSample] = []
    count = int(math.floor((stop_px - start_px) / step_px + 1e-9)) + 1
    for period_px in start_px + step_px * np.arange(count):
        try:
            samples.append(SweepSample(period_px=float(period_px), entropy_bits=entropy_at(period_px)))
        except PcgError as e:
            logging.warning(f"Sweep sample at {period_px:.2f} px failed: {e.message}")
            samples.append(SweepSample(period_px=float(period_px), error=e.code))

    markers: List[SweepMarker] = []
    if j != k:
        m = 1
        while True:
            period_px = marker_period(config, j, k, m) * scale.pixels_per_unit
            if period_px < start_px:
                break
            if period_px <= stop_px:
                try:
                    value = entropy_at(period_px)
                except PcgError:
                    value = None
                markers.append(SweepMarker(
                    m=m, period_px=period_px, allowed=math.gcd(m, config.d) == 1, entropy_bits=value
                ))
            m += 1
        markers.reverse()

    logging.info(f"Entropy sweep j={j} u={u} k={k}: {len(samples)} samples, {len(markers)} markers")
    return SweepResult(j=j, k=k, u=u, d=config.d, samples=samples, markers=markers)


def reproduce_tables(
    config: MumConfig,
    noise_fraction: float = 0.02,
    grid: Optional[GridSpec] = None,
    beam_width: float = TABLE_BEAM_WIDTH,
    outcome: int = 0,
    sensitivity: bool = False,
) -> EntropyTables:
    """Entropy and KL tables over every (preparation, measurement) pair.

    noise_fraction is the background probability leaving the prepared
    outcome, as quoted for the optical setup. With `sensitivity` the tables
    also carry the noiseless entropy spread over every prepared outcome.
    """
    grid = grid or cvsim.default_grid()
    mixing = leak_to_mixing(noise_fraction, config.d)
    source = cvsim.gaussian_state(grid, beam_width)
    entropies: List[List[float]] = []
    divergences: List[List[Optional[float]]] = []
    for j in range(config.R):
        prepared = cvsim.prepare(source, config, j, outcome)
        row_h, row_kl = [], []
        for k in range(config.R):
            dist = apply_background(cvsim.measure_probs(prepared, config, j, k), mixing)
            row_h.append(shannon_entropy(dist))
            row_kl.append(None if j == k else kl_uniform(dist))
        entropies.append(row_h)
        divergences.append(row_kl)
    spread = None
    if sensitivity:
        spread = [
            [_spread(outcome_sensitivity(config, j, k, grid=grid, beam_width=beam_width)) for k in range(config.R)]
            for j in range(config.R)
        ]
    return EntropyTables(
        d=config.d,
        noise_fraction=noise_fraction,
        outcome=outcome,
        entropy=entropies,
        kl=divergences,
        outcome_spread=spread
    )


def _spread(values: Sequence[float]) -> float:
    return float(max(values) - min(values))


def outcome_sensitivity(
    config: MumConfig,
    j: int,
    k: int,
    grid: Optional[GridSpec] = None,
    beam_width: float = TABLE_BEAM_WIDTH,
) -> List[float]:
    """Entropy of measurement k for every prepared outcome u of direction j"""
    grid = grid or cvsim.default_grid()
    source = cvsim.gaussian_state(grid, beam_width)
    return [
        shannon_entropy(cvsim.measure_probs(cvsim.prepare(source, config, j, u), config, j, k))
        for u in range(config.d)
    ]


def convergence_study(
    config: MumConfig,
    j: int,
    k: int,
    sizes: Sequence[int] = (512, 1024, 2048, 4096),
    beam_width: float = TABLE_BEAM_WIDTH,
    u: int = 0,
) -> Dict[int, float]:
    """Largest deviation from the uniform distribution per grid size"""
    deviations: Dict[int, float] = {}
    for n in sizes:
        grid = cvsim.default_grid(n)
        prepared = cvsim.prepare(cvsim.gaussian_state(grid, beam_width), config, j, u)
        dist = cvsim.measure_probs(prepared, config, j, k)
        deviations[n] = float(np.max(np.abs(dist.array - 1.0 / config.d)))
        logging.debug(f"Convergence n={n}: max deviation {deviations[n]:.3e}")
    return deviations


def convergence_frame(deviations: Dict[int, float]) -> pd.DataFrame:
    return pd.DataFrame(
        {"grid_size": list(deviations), "max_deviation": list(deviations.values())},
        columns=["grid_size", "max_deviation"]
    )


def tables_frame(tables: EntropyTables) -> pd.DataFrame:
    columns = ["prep", "meas", "entropy_bits", "kl_bits"]
    if tables.outcome_spread is not None:
        columns.append("outcome_spread_bits")
    rows = []
    for j, (row_h, row_kl) in enumerate(zip(tables.entropy, tables.kl)):
        for k, (h, kl) in enumerate(zip(row_h, row_kl)):
            row = {"prep": j, "meas": k, "entropy_bits": h, "kl_bits": kl}
            if tables.outcome_spread is not None:
                row["outcome_spread_bits"] = tables.outcome_spread[j][k]
            rows.append(row)
    return pd.DataFrame(rows, columns=columns)


def sweep_frame(sweep: SweepResult) -> pd.DataFrame:
    rows = []
    for sample in sweep.samples:
        nearby = [marker.m for marker in sweep.markers if abs(marker.period_px - sample.period_px) <= 0.5]
        rows.append({
            "period_px": sample.period_px,
            "entropy_bits": sample.entropy_bits,
            "marker_m": nearby[0] if nearby else None,
        })
    return pd.DataFrame(rows, columns=["period_px", "entropy_bits", "marker_m"])
