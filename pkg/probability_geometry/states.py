"""
Initial-state families.

Every family returns a normalized EnsembleState. Random families take a
numpy Generator so a fixed seed always reproduces the same samples.
"""

import logging

import numpy as np

from .errors import FieldError
from .fields import ComplexField, EnsembleState, ScalarField, madelung_forward
from .grid import integrate_array

logger = logging.getLogger("probability_geometry.states")

# Periodic images are summed out to this many packet widths.
WRAP_REACH = 8.0


def _per_axis(grid, value, name):
    if value is None:
        return None
    arr = np.broadcast_to(np.asarray(value, dtype=float), (grid.dim,))
    if not np.all(np.isfinite(arr)):
        raise FieldError(f"{name} must be finite, got {value}")
    return tuple(float(v) for v in arr)


def _normalize(grid, density):
    total = float(integrate_array(grid, density))
    if total <= 0.0:
        raise FieldError("Density integrates to zero on this grid")
    return density / total


def plane_wave_phase(grid, momentum, origin=None):
    """S = p . (x - origin)."""
    momentum = _per_axis(grid, momentum, "momentum")
    origin = _per_axis(grid, origin, "origin") or grid.center()
    mesh = grid.mesh()
    return sum(p * (x - x0) for p, x, x0 in zip(momentum, mesh, origin))


def gaussian_state(grid, alpha, center=None, sigma=1.0, momentum=0.0):
    """Gaussian packet P ~ exp(-|x-c|^2 / 2 sigma^2) with S = p . (x - c)."""
    center = _per_axis(grid, center, "center") or grid.center()
    if not sigma > 0:
        raise FieldError(f"sigma must be positive, got {sigma}")
    mesh = grid.mesh()
    r2 = sum((x - c) ** 2 for x, c in zip(mesh, center))
    P = _normalize(grid, np.exp(-r2 / (2.0 * sigma ** 2)))
    S = plane_wave_phase(grid, momentum, center)
    return EnsembleState.from_arrays(grid, P, S, alpha)


def periodic_gaussian_state(grid, alpha, center=None, sigma=1.0):
    """Smooth periodic bump that looks like a Gaussian of width sigma near its center.

    P ~ exp(-sum_k (L_k/pi)^2 sin^2(pi (x_k - c_k)/L_k) / 2 sigma^2). On a periodic
    grid it has no kink at the box edge and min(P)/max(P) = exp(-L^2/(2 pi^2 sigma^2)).
    """
    if not grid.periodic:
        raise FieldError("periodic_gaussian_state needs a periodic grid")
    center = _per_axis(grid, center, "center") or grid.center()
    if not sigma > 0:
        raise FieldError(f"sigma must be positive, got {sigma}")
    chord2 = sum(
        (length / np.pi) ** 2 * np.sin(np.pi * (x - c) / length) ** 2
        for x, c, length in zip(grid.mesh(), center, grid.extents)
    )
    P = _normalize(grid, np.exp(-chord2 / (2.0 * sigma ** 2)))
    return EnsembleState.from_arrays(grid, P, np.zeros(grid.shape), alpha)


def wrapped_gaussian_wavefunction(grid, alpha, mass, sigma=1.0, t=0.0, center=None):
    """Free Gaussian packet at time t, summed over its periodic images.

    Per axis psi = sum_n (1 + i tau)^(-1/2) exp(-(x - c - n L)^2 / 4 sigma^2 (1 + i tau))
    with tau = alpha t / (2 m sigma^2); the product over axes is normalized on
    the grid. Vanishing grids take the n = 0 term alone. This is the exact
    solution of the free Schrodinger equation started from the t = 0 packet.
    """
    center = _per_axis(grid, center, "center") or grid.center()
    if not sigma > 0:
        raise FieldError(f"sigma must be positive, got {sigma}")
    if not mass > 0:
        raise FieldError(f"mass must be positive, got {mass}")
    spread = complex(1.0, alpha * t / (2.0 * mass * sigma ** 2))
    width = sigma * abs(spread)
    psi = np.ones(grid.shape, dtype=complex)
    for x, c, length in zip(grid.mesh(), center, grid.extents):
        reach = int(np.ceil(WRAP_REACH * width / length)) if grid.periodic else 0
        images = sum(
            np.exp(-((x - c - n * length) ** 2) / (4.0 * sigma ** 2 * spread))
            for n in range(-reach, reach + 1)
        )
        psi = psi * images / np.sqrt(spread)
    psi = psi / np.sqrt(float(integrate_array(grid, np.abs(psi) ** 2)))
    return ComplexField(grid, psi, normalized=True)


def wrapped_gaussian_state(grid, alpha, center=None, sigma=1.0):
    """Gaussian packet with S = 0, wrapped onto a periodic box.

    min(P)/max(P) is about 4 exp(-L^2/(8 sigma^2)) per axis, so a box a few
    sigma wide keeps the state node-free.
    """
    psi = wrapped_gaussian_wavefunction(grid, alpha, 1.0, sigma, 0.0, center)
    P = _normalize(grid, np.abs(psi.values) ** 2)
    return EnsembleState.from_arrays(grid, P, np.zeros(grid.shape), alpha)


def uniform_state(grid, alpha, momentum=0.0):
    """P = 1/V with S = p . x."""
    P = np.full(grid.shape, 1.0 / grid.volume)
    S = plane_wave_phase(grid, momentum, tuple(0.0 for _ in range(grid.dim)))
    return EnsembleState.from_arrays(grid, P, S, alpha)


def fourier_modulation(grid, rng, modes=2, amplitude=0.3):
    """Seeded low-order Fourier series, periodic over the box."""
    mesh = grid.mesh()
    phases = [2.0 * np.pi * (x - lo) / length for x, lo, length in zip(mesh, grid.lower, grid.extents)]
    out = np.zeros(grid.shape)
    for u in phases:
        for n in range(1, modes + 1):
            a, b = rng.normal(size=2) * amplitude / n
            out += a * np.cos(n * u) + b * np.sin(n * u)
    if grid.dim > 1:
        a, b = rng.normal(size=2) * amplitude / 2.0
        mixed = sum(phases)
        out += a * np.cos(mixed) + b * np.sin(mixed)
    return out


def random_smooth_state(grid, alpha, rng, modes=2, amplitude=0.3, envelope=None):
    """Seeded node-free smooth state.

    Vanishing grids get a Gaussian envelope (width envelope, default one
    fourteenth of the shortest side) so the state is effectively compact;
    periodic grids get a purely periodic log-density.
    """
    log_density = fourier_modulation(grid, rng, modes, amplitude)
    if not grid.periodic:
        width = envelope if envelope is not None else min(grid.extents) / 14.0
        r2 = sum((x - c) ** 2 for x, c in zip(grid.mesh(), grid.center()))
        log_density = log_density - r2 / (2.0 * width ** 2)
    P = _normalize(grid, np.exp(log_density))
    S = alpha * fourier_modulation(grid, rng, modes, amplitude)
    return EnsembleState.from_arrays(grid, P, S, alpha)


def random_amplitude(grid, rng):
    """Smooth random A_x field for Kahler checks."""
    return ScalarField(grid, fourier_modulation(grid, rng, modes=3, amplitude=0.5))


def random_complex_field(grid, rng):
    """Unnormalized white-noise complex samples."""
    values = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    return ComplexField(grid, values)


def random_wavefunction(grid, alpha, rng):
    """Normalized smooth psi from a random smooth state."""
    return madelung_forward(random_smooth_state(grid, alpha, rng))
