import json
import logging
import math
from typing import Optional, TextIO, Union

import numpy as np
import pandas as pd

from pcgmum.models.schemas import BinMask, GridSpec, GridState, MumConfig, OutcomeDistribution
from pcgmum.services.frft import frft
from pcgmum.settings import get_settings
from pcgmum.utils.errors import (
    DomainError,
    EmptyPreparationError,
    GridTooSmallError,
    ResolutionError,
)

TRUNCATION_REPORT = 1e-6
TRUNCATION_FATAL = 1e-3
NORM_TOL = 1e-6
EMPTY_NORM = 1e-14
INSIDE_TOL = 1e-9


def default_grid(n: Optional[int] = None) -> GridSpec:
    n = n or get_settings().grid_size
    if n < 64 or n & (n - 1):
        raise DomainError(f"grid size must be a power of two of at least 64, got {n}", n=n)
    return GridSpec.symmetric(n)


def gaussian_state(grid: GridSpec, width: float, center: float = 0.0) -> GridState:
    """Normalized exp(-(q - center)^2 / (2 width^2)) on the grid"""
    if width < 4 * grid.spacing or width > grid.extent / 4:
        raise ResolutionError(
            f"width {width} not resolvable on a grid with spacing {grid.spacing:.4g} "
            f"and extent {grid.extent:.4g}",
            width=width, spacing=grid.spacing, extent=grid.extent
        )
    q = grid.points()
    amplitudes = np.exp(-(q - center) ** 2 / (2 * width ** 2)).astype(complex)
    state = GridState(amplitudes=amplitudes, spacing=grid.spacing, center=grid.center)
    return normalize(state)


def normalize(state: GridState) -> GridState:
    norm = state.norm
    if norm < EMPTY_NORM:
        raise EmptyPreparationError("cannot normalize a state with zero norm")
    return state.evolve(state.amplitudes / norm)


def bin_index(q: Union[float, np.ndarray], mask: BinMask) -> np.ndarray:
    """Outcome index of each point: bins are half-open [u s, (u+1) s) modulo the period"""
    remainder = np.mod(np.asarray(q, dtype=float) - mask.offset, mask.period)
    return np.minimum(np.floor(remainder / mask.width).astype(int), mask.bins - 1)


def mask_value(q: float, mask: BinMask, u: int) -> int:
    if not 0 <= u < mask.bins:
        raise DomainError(f"outcome {u} out of range for {mask.bins} bins", u=u)
    return int(bin_index(q, mask) == u)


def _covered(x: np.ndarray, mask: BinMask) -> np.ndarray:
    """Measure of each bin's support in (-inf, x], up to a common constant; shape (bins, len(x))"""
    y = x - mask.offset
    turns = np.floor(y / mask.period)
    remainder = y - turns * mask.period
    starts = np.arange(mask.bins)[:, None] * mask.width
    return turns * mask.width + np.clip(remainder - starts, 0.0, mask.width)


def cell_weights(q: np.ndarray, spacing: float, mask: BinMask) -> np.ndarray:
    """Fraction of each grid cell [q - h/2, q + h/2) falling in each bin, shape (bins, len(q)).

    Columns sum to one; a cell lying wholly inside bin u has weight 1 there and
    exactly 0 elsewhere.
    """
    upper = _covered(q + spacing / 2, mask)
    lower = _covered(q - spacing / 2, mask)
    return (upper - lower) / spacing


def config_mask(config: MumConfig, j: int) -> BinMask:
    return BinMask(period=config.periods[j], bins=config.d, offset=config.offsets[j])


def _check_index(config: MumConfig, j: int, name: str) -> None:
    if not 0 <= j < config.R:
        raise DomainError(f"{name}={j} is not a direction of this configuration (R={config.R})")


def prepare(input_state: GridState, config: MumConfig, j: int, u: int) -> GridState:
    """Rotate into direction j, open the cells of bin set (j, u), renormalize.

    Only grid cells lying wholly inside the bin are kept, so the prepared
    state is supported strictly within M_{j,u}.
    """
    _check_index(config, j, "j")
    if not 0 <= u < config.d:
        raise DomainError(f"outcome u={u} out of range for d={config.d}", u=u)
    if abs(input_state.norm - 1.0) > NORM_TOL:
        raise DomainError(f"input state must be normalized, norm={input_state.norm}")
    rotated = frft(input_state, config.angles[j])
    aperture = cell_weights(rotated.q, rotated.spacing, config_mask(config, j))[u] >= 1.0 - INSIDE_TOL
    masked = rotated.amplitudes * aperture
    norm = math.sqrt(float(np.sum(np.abs(masked) ** 2)) * rotated.spacing)
    if norm < EMPTY_NORM:
        raise EmptyPreparationError(
            f"preparation ({j}, {u}) has no overlap with the input state", j=j, u=u
        )
    return rotated.evolve(masked / norm)


def bin_probabilities(
    density: np.ndarray,
    q: np.ndarray,
    spacing: float,
    mask: BinMask
) -> OutcomeDistribution:
    """Integrate a probability density over each bin set.

    The reported truncation_loss is a proxy: the share of the density in the
    outer n/128 samples at each edge. A periodic grid wraps that share around
    instead of losing it, so a large value means aliasing, not missing mass.
    """
    weights = cell_weights(q, spacing, mask) @ density * spacing
    total = float(weights.sum())
    if total <= 0:
        raise EmptyPreparationError("density carries no probability")
    guard = max(1, density.size // 128)
    loss = float(density[:guard].sum() + density[-guard:].sum()) * spacing / total
    if loss > TRUNCATION_FATAL:
        raise GridTooSmallError(
            f"{loss:.2e} of the probability sits at the grid edge; enlarge the grid",
            truncation_loss=loss
        )
    if loss > TRUNCATION_REPORT:
        logging.info(f"Truncation loss {loss:.2e} at the grid edge (renormalized)")
    return OutcomeDistribution.from_weights(weights, truncation_loss=loss)


def rotated_density(state: GridState, angle: float) -> np.ndarray:
    return intensity_profile(frft(state, angle))


def measure_with_mask(state: GridState, angle: float, mask: BinMask) -> OutcomeDistribution:
    return bin_probabilities(rotated_density(state, angle), state.q, state.spacing, mask)


def measure_probs(state: GridState, config: MumConfig, from_j: int, to_k: int) -> OutcomeDistribution:
    """Outcome distribution of measurement to_k for a state held in direction from_j's frame"""
    _check_index(config, from_j, "from_j")
    _check_index(config, to_k, "to_k")
    angle = config.angles[to_k] - config.angles[from_j]
    return measure_with_mask(state, angle, config_mask(config, to_k))


def intensity_profile(state: GridState) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def state_frame(state: GridState) -> pd.DataFrame:
    return pd.DataFrame({
        "q": state.q,
        "re": state.amplitudes.real,
        "im": state.amplitudes.imag,
        "abs2": intensity_profile(state),
    })


def export_state_csv(state: GridState, target: Union[str, TextIO]) -> None:
    state_frame(state).to_csv(target, index=False, float_format="%.12g")


def distribution_json(dist: OutcomeDistribution) -> str:
    return json.dumps(dist.probs)
