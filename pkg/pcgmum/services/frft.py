"""Fractional Fourier transform on a symmetric grid.

Grid points sit at (i - (n-1)/2) * spacing with spacing**2 = 2 pi / n, so the
order-pi/2 transform maps the grid onto itself and is computed as an exact
centered DFT. Every order is the matrix power of that DFT taken in a
Hermite-ordered eigenbasis:

    F_a = sum_n exp(-i n a) v_n v_n^T

On even functions the centered DFT acts on the positive half-grid as an
orthonormal DCT-IV, on odd functions as -i times a DST-IV. Both are symmetric
involutions, so their +1 / -1 eigenspaces hold the Hermite classes n = 0, 2
(mod 4) and n = 1, 3 (mod 4). Inside each class the sampled Hermite functions
are orthonormalized in order, which makes v_n the sampled h_n wherever h_n is
resolved on the grid. F_a F_b = F_{a+b} holds to rounding for every state.
"""
import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.fft import dct, dst

from pcgmum.models.schemas import GridState
from pcgmum.utils.errors import DomainError

ANGLE_ATOL = 1e-12
SPACING_RTOL = 1e-9
RESCALE = 1e100
BASIS_CACHE = 8


def reduce_angle(angle: float) -> float:
    """Map an order angle into (-pi, pi]"""
    reduced = math.remainder(angle, 2 * math.pi)
    if math.isclose(reduced, -math.pi, abs_tol=ANGLE_ATOL):
        return math.pi
    return reduced


def check_symmetric(state: GridState) -> None:
    expected = math.sqrt(2 * math.pi / state.n)
    if state.center != 0.0:
        raise DomainError("fractional Fourier transforms need a grid centred on the origin",
                          center=state.center)
    if not math.isclose(state.spacing, expected, rel_tol=SPACING_RTOL):
        raise DomainError(
            f"grid spacing {state.spacing} is not the symmetric value {expected} for n={state.n}",
            spacing=state.spacing, n=state.n
        )
    if state.n % 4:
        raise DomainError(f"fractional Fourier transforms need n divisible by 4, got {state.n}",
                          n=state.n)


def _twiddles(n: int):
    index = np.arange(n)
    # exp(2 pi i c index / n) with c = (n - 1) / 2, reduced exactly
    twiddle = np.exp(1j * np.pi * (((n - 1) * index) % (2 * n)) / n)
    constant = np.exp(-1j * np.pi * (((n - 1) ** 2) % (4 * n)) / (2 * n))
    return twiddle, constant


def centered_fft(amplitudes: np.ndarray) -> np.ndarray:
    """psi_hat(p_k) = (2 pi)^(-1/2) sum_n psi(q_n) exp(-i p_k q_n) spacing"""
    twiddle, constant = _twiddles(amplitudes.size)
    return constant * twiddle * np.fft.fft(amplitudes * twiddle, norm="ortho")


def centered_ifft(amplitudes: np.ndarray) -> np.ndarray:
    twiddle, constant = _twiddles(amplitudes.size)
    return np.conj(constant) * np.conj(twiddle) * np.fft.ifft(amplitudes * np.conj(twiddle), norm="ortho")


def hermite_functions(q: np.ndarray, n_max: int) -> np.ndarray:
    """Normalized Hermite functions h_0 .. h_{n_max} sampled at q, shape (n_max+1, len(q)).

    The three-term recurrence runs on rescaled values with the exponent kept
    per point, so high orders stay accurate where exp(-q^2/2) underflows.
    """
    q = np.asarray(q, dtype=float)
    table = np.zeros((n_max + 1, q.size))
    log_scale = -q ** 2 / 2 - 0.25 * math.log(math.pi)
    previous = np.zeros_like(q)
    current = np.ones_like(q)
    table[0] = np.exp(log_scale)
    for n in range(n_max):
        following = math.sqrt(2 / (n + 1)) * q * current - math.sqrt(n / (n + 1)) * previous
        previous, current = current, following
        large = np.abs(current) > RESCALE
        if large.any():
            current[large] /= RESCALE
            previous[large] /= RESCALE
            log_scale[large] += math.log(RESCALE)
        table[n + 1] = current * np.exp(log_scale)
    return table


def _involution_eigenspaces(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = np.linalg.eigh(matrix)
    return vectors[:, values > 0], vectors[:, values < 0]


def _hermite_aligned(space: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Orthonormalize the projections of `samples` onto `space`, column order kept"""
    q, r = np.linalg.qr(space.T @ samples)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return space @ (q * signs)


@lru_cache(maxsize=BASIS_CACHE)
def _eigenbasis(n: int) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
    """(orders, vectors) per Hermite class on the positive half-grid.

    Classes are listed as n = 0, 2 (even part) then n = 1, 3 (odd part).
    """
    half = n // 2
    x = (np.arange(half) + 0.5) * math.sqrt(2 * math.pi / n)
    hermite = hermite_functions(x, n - 1).T
    identity = np.eye(half)
    even_plus, even_minus = _involution_eigenspaces(dct(identity, type=4, norm="ortho", axis=0))
    odd_plus, odd_minus = _involution_eigenspaces(dst(identity, type=4, norm="ortho", axis=0))
    classes = []
    for residue, space in ((0, even_plus), (2, even_minus), (1, odd_plus), (3, odd_minus)):
        orders = np.arange(residue, n, 4)
        if space.shape[1] != orders.size:
            raise DomainError(f"eigenspace of class {residue} has dimension {space.shape[1]}, "
                              f"expected {orders.size}", n=n)
        vectors = _hermite_aligned(space, hermite[:, orders])
        vectors.setflags(write=False)
        orders.setflags(write=False)
        classes.append((orders, vectors))
    return tuple(classes)


def _real_matmul(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    parts = matrix @ np.column_stack([vector.real, vector.imag])
    return parts[:, 0] + 1j * parts[:, 1]


def _rotate_half(classes, half_vector: np.ndarray, angle: float) -> np.ndarray:
    result = np.zeros(half_vector.size, dtype=complex)
    for orders, vectors in classes:
        coefficients = _real_matmul(vectors.T, half_vector) * np.exp(-1j * orders * angle)
        result += _real_matmul(vectors, coefficients)
    return result


def _eigen_transform(amplitudes: np.ndarray, angle: float) -> np.ndarray:
    n = amplitudes.size
    half = n // 2
    classes = _eigenbasis(n)
    right = amplitudes[half:]
    left = amplitudes[half - 1::-1]
    even = _rotate_half(classes[:2], (right + left) / 2, angle)
    odd = _rotate_half(classes[2:], (right - left) / 2, angle)
    result = np.empty(n, dtype=complex)
    result[half:] = even + odd
    result[:half] = (even - odd)[::-1]
    return result


def _transform(amplitudes: np.ndarray, angle: float) -> np.ndarray:
    if abs(angle) < ANGLE_ATOL:
        return amplitudes.copy()
    if math.isclose(angle, math.pi / 2, abs_tol=ANGLE_ATOL):
        return centered_fft(amplitudes)
    if math.isclose(angle, -math.pi / 2, abs_tol=ANGLE_ATOL):
        return centered_ifft(amplitudes)
    if math.isclose(angle, math.pi, abs_tol=ANGLE_ATOL):
        return amplitudes[::-1].copy()
    return _eigen_transform(amplitudes, angle)


def frft(state: GridState, order_angle: float) -> GridState:
    """Order-theta fractional Fourier transform (phase-space rotation by theta).

    Convention: Hermite function h_n picks up exp(-i n theta); F_{pi/2} is the
    unitary Fourier transform with kernel (2 pi)^(-1/2) exp(-i p q).
    """
    check_symmetric(state)
    angle = reduce_angle(order_angle)
    return state.evolve(_transform(state.amplitudes, angle))


def hermite_frft(state: GridState, order_angle: float, n_max: int = None) -> GridState:
    """FrFT by expansion in Hermite functions; an independent check on `frft`
    for smooth states at small grid sizes."""
    if n_max is None:
        n_max = min(64, state.n // 4)
    basis = hermite_functions(state.q, n_max)
    coefficients = basis @ state.amplitudes * state.spacing
    phases = np.exp(-1j * np.arange(n_max + 1) * order_angle)
    return state.evolve((coefficients * phases) @ basis)
