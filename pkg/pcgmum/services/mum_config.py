import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from pcgmum.models.schemas import (
    MultiplierMatrix,
    MumConfig,
    PairCheck,
    PhysicalScale,
    VerificationReport,
)
from pcgmum.services.numtheory import consistent_family, coprime_with_dimension, r_max
from pcgmum.utils.errors import BoundError, ConstructionError, DegenerateAngleError, DomainError

TWO_PI = 2 * math.pi
SIN_EPS = 1e-12
INTEGER_TOL = 1e-9

Rational = Union[Fraction, int, str, float]


def cv_overlap(theta_jk: float) -> float:
    """|<q_j|q_k>| for two quadratures separated by theta_jk"""
    s = abs(math.sin(theta_jk))
    if s < SIN_EPS:
        raise DegenerateAngleError(
            f"overlap undefined for parallel directions (theta={theta_jk})", theta=theta_jk
        )
    return (TWO_PI * s) ** -0.5


def _check_angles(angles: Sequence[float]) -> None:
    if not angles or angles[0] != 0.0:
        raise DomainError("angles must start at 0", angles=list(angles))
    for j, theta in enumerate(angles[1:], start=1):
        if math.sin(theta) < SIN_EPS:
            raise DegenerateAngleError(f"direction {j} is parallel to direction 0", j=j, theta=theta)
    if any(b <= a for a, b in zip(angles, angles[1:])) or angles[-1] >= math.pi:
        raise DomainError("angles must be strictly increasing in [0, pi)", angles=list(angles))


def periods_from_anchor(d: int, T0: float, angles: Sequence[float], m_col: Sequence[int]) -> List[float]:
    """T_j = 2 pi d sin(theta_j) / (m_j0 T_0) for j >= 1, prepended with T_0"""
    if T0 <= 0:
        raise DomainError(f"T0 must be positive, got {T0}")
    if len(m_col) != len(angles) - 1:
        raise DomainError(f"need {len(angles) - 1} multipliers m_j0, got {len(m_col)}")
    _check_angles(angles)
    periods = [T0]
    for theta, m_j0 in zip(angles[1:], m_col):
        periods.append(TWO_PI * d * math.sin(theta) / (m_j0 * T0))
    return periods


def parse_rational(Q: Rational) -> Fraction:
    try:
        value = Fraction(Q) if not isinstance(Q, float) else Fraction(Q).limit_denominator(10 ** 6)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise DomainError(f"Q must be a rational number, got {Q!r}") from e
    if value <= 0:
        raise DomainError(f"Q must be positive, got {Q!r}")
    return value


def cot_ratio_exact(j: int, Q: Rational) -> Fraction:
    """cot(j theta) / cot(theta) for tan(theta) = sqrt(Q), in exact arithmetic.

    Numerator and denominator only involve even powers of tan(theta), i.e.
    integer powers of Q.
    """
    Q = parse_rational(Q)
    numerator = sum(
        (-1) ** (l // 2) * math.comb(j, l) * Q ** (l // 2) for l in range(0, j + 1, 2)
    )
    denominator = sum(
        (-1) ** ((l - 1) // 2) * math.comb(j, l) * Q ** ((l - 1) // 2) for l in range(1, j + 1, 2)
    )
    if denominator == 0:
        raise DegenerateAngleError(f"cot({j} theta) is infinite for Q={Q}", j=j)
    return Fraction(numerator) / Fraction(denominator)


def symmetric_multipliers_exact(Q: Rational, m_col0: Sequence[int]) -> List[List[Fraction]]:
    """Rows of m[j][k] for the symmetric recipe, exact.

    With T_0^2 / (2 pi d) = tan(theta) / 2 the completion rule reads
    m[j][k] = m[j][0] m[k][0] (c_k - c_j) / 2 with c_i = cot(i theta) / cot(theta).
    """
    R = len(m_col0) + 1
    ratios = [None] + [cot_ratio_exact(i, Q) for i in range(1, R)]
    col0 = [None] + list(m_col0)
    rows: List[List[Fraction]] = [[]]
    for j in range(1, R):
        row = [Fraction(col0[j])]
        for k in range(1, j):
            row.append(Fraction(col0[j] * col0[k]) * (ratios[k] - ratios[j]) / 2)
        rows.append(row)
    return rows


def build_symmetric(d: int, Q: Rational, R: int, m_col0: Sequence[int]) -> MumConfig:
    """Symmetric configuration: theta_j = j theta, tan(theta) = sqrt(Q),
    T_0 = sqrt(pi d tan(theta))."""
    Q = parse_rational(Q)
    bound = r_max(d)
    if R > bound:
        raise BoundError(f"R={R} exceeds the maximum {bound} for d={d}", d=d, R=R, r_max=bound)
    if R < 2:
        raise DomainError(f"R must be at least 2, got {R}")
    if len(m_col0) != R - 1:
        raise DomainError(f"m_col0 needs {R - 1} entries (m_10 .. m_{R - 1}0), got {len(m_col0)}")
    for j, m_j0 in enumerate(m_col0, start=1):
        if m_j0 < 1 or not coprime_with_dimension(m_j0, d):
            raise ConstructionError(f"m[{j}][0]={m_j0} is not coprime with d={d}", pair=(j, 0))

    tan_theta = math.sqrt(Q)
    theta = math.atan(tan_theta)
    if theta > math.pi / R * (1 + 1e-12):
        raise DomainError(f"theta={theta:.6f} exceeds pi/R={math.pi / R:.6f}; lower Q", Q=str(Q), R=R)

    angles = [j * theta for j in range(R)]
    T0 = math.sqrt(math.pi * d * tan_theta)
    periods = periods_from_anchor(d, T0, angles, m_col0)

    exact = symmetric_multipliers_exact(Q, m_col0)
    m_rows: List[List[int]] = [[]]
    scale = T0 ** 2 / (TWO_PI * d)
    for j in range(1, R):
        row = [m_col0[j - 1]]
        for k in range(1, j):
            value = exact[j][k]
            approx = m_col0[j - 1] * m_col0[k - 1] * scale * (_cot(angles[k]) - _cot(angles[j]))
            if abs(approx - float(value)) >= INTEGER_TOL * max(1.0, abs(approx)):
                logging.warning(f"Floating evaluation of m[{j}][{k}]={approx!r} disagrees with exact {value}")
            if value.denominator != 1 or value < 1:
                raise ConstructionError(
                    f"m[{j}][{k}] = {value} is not a positive integer for d={d}, Q={Q}",
                    pair=(j, k), value=str(value)
                )
            if not coprime_with_dimension(int(value), d):
                raise ConstructionError(
                    f"m[{j}][{k}] = {value} is not coprime with d={d}", pair=(j, k), value=str(value)
                )
            row.append(int(value))
        m_rows.append(row)

    config = MumConfig(
        d=d,
        angles=angles,
        periods=periods,
        m_matrix=MultiplierMatrix(d=d, m=m_rows),
        offsets=[0.0] * R
    )
    report = verify_config(config)
    if not report.passed:
        raise ConstructionError(
            f"symmetric configuration failed verification on pairs {report.failing_pairs()}",
            pair=report.failing_pairs()[0]
        )
    logging.info(f"Built symmetric configuration d={d} Q={Q} R={R} m_col0={list(m_col0)}")
    return config


def _cot(theta: float) -> float:
    return math.cos(theta) / math.sin(theta)


def implied_multiplier(config: MumConfig, j: int, k: int) -> float:
    return TWO_PI * config.d * abs(math.sin(config.angles[j] - config.angles[k])) / (
        config.periods[j] * config.periods[k]
    )


def verify_config(config: MumConfig, rel_tol: float = 1e-9) -> VerificationReport:
    pairs: List[PairCheck] = []
    for j in range(1, config.R):
        for k in range(j):
            implied = implied_multiplier(config, j, k)
            nearest = max(1, int(round(implied)))
            residual = abs(implied - nearest) / nearest
            stored = config.m_matrix.get(j, k)
            coprime = coprime_with_dimension(nearest, config.d)
            pairs.append(PairCheck(
                j=j,
                k=k,
                implied_m=implied,
                nearest=nearest,
                residual=residual,
                stored=stored,
                coprime=coprime,
                passed=residual < rel_tol and coprime and stored == nearest
            ))
    family = consistent_family(config.m_matrix)
    report = VerificationReport(
        d=config.d,
        rel_tol=rel_tol,
        pairs=pairs,
        family_consistent=family,
        passed=family and all(pair.passed for pair in pairs)
    )
    if not report.passed:
        logging.info(f"Configuration d={config.d} fails on pairs {report.failing_pairs()}")
    return report


def normalize_directions(
    angles: Sequence[float],
    periods: Sequence[float],
    offsets: Optional[Sequence[float]] = None
) -> Tuple[List[float], List[float], List[float], List[int]]:
    """Reflect directions into the upper semi-plane, order them and rotate so
    the first angle is 0. Returns (angles, periods, offsets, order)."""
    offsets = list(offsets) if offsets else [0.0] * len(angles)
    folded = []
    for theta, offset in zip(angles, offsets):
        theta = math.fmod(theta, TWO_PI)
        if theta < 0:
            theta += TWO_PI
        if theta >= math.pi:
            # q -> -q flips the mask origin as well
            theta -= math.pi
            offset = -offset
        folded.append((theta, offset))
    order = sorted(range(len(angles)), key=lambda i: folded[i][0])
    base = folded[order[0]][0]
    return (
        [folded[i][0] - base for i in order],
        [periods[i] for i in order],
        [folded[i][1] for i in order],
        order
    )


def from_directions(
    d: int,
    angles: Sequence[float],
    periods: Sequence[float],
    offsets: Optional[Sequence[float]] = None,
    m_matrix: Optional[MultiplierMatrix] = None
) -> MumConfig:
    """Config from arbitrary directions; m is inferred from the periods when absent"""
    angles, periods, offsets, order = normalize_directions(angles, periods, offsets)
    if m_matrix is not None and order != sorted(order):
        raise DomainError("m_matrix must be given in angle order", order=order)
    if m_matrix is None:
        rows: List[List[int]] = [[]]
        for j in range(1, len(angles)):
            rows.append([
                max(1, int(round(TWO_PI * d * abs(math.sin(angles[j] - angles[k])) / (periods[j] * periods[k]))))
                for k in range(j)
            ])
        m_matrix = MultiplierMatrix(d=d, m=rows)
    return MumConfig(d=d, angles=angles, periods=periods, m_matrix=m_matrix, offsets=offsets)


def to_physical(config: MumConfig, scale: PhysicalScale) -> List[float]:
    """T'_j = sqrt(lambda z / pi) T_j in pixels (unrounded)"""
    return [period * scale.pixels_per_unit for period in config.periods]


def from_physical(period_px: float, scale: PhysicalScale) -> float:
    return period_px / scale.pixels_per_unit


def round_to_pixels(
    config: MumConfig,
    scale: PhysicalScale,
    rel_tol: float = 2e-2
) -> Tuple[List[int], VerificationReport]:
    """Pixel periods rounded to the nearest multiple of d, so every bin is a
    whole number of pixels, and the report of the rounded configuration"""
    pixels = [max(1, int(round(period / config.d))) * config.d for period in to_physical(config, scale)]
    rounded = config.model_copy(update={"periods": [from_physical(px, scale) for px in pixels]})
    return pixels, verify_config(rounded, rel_tol=rel_tol)


def beam_width(scale: PhysicalScale, radius: float) -> float:
    """Dimensionless amplitude width of a Gaussian beam with 1/e^2 intensity radius"""
    return radius / scale.length_factor / math.sqrt(2)
