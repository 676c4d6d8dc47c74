"""
Configuration-space grid.

Discretizes an n-dimensional box (n = 1..3) and supplies the coordinates,
quadrature and differential operators every other module consumes.

Two boundary modes:
  - periodic:  derivatives wrap around; summation by parts is exact.
  - vanishing: fields are taken to be zero outside the box. First derivatives
               fall back to one-sided second-order formulas at the edges,
               second derivatives use zero ghost values.

Two derivative schemes:
  - central:  finite-difference stencils of order 2 (default), 4, 6 or 8.
  - spectral: FFT derivatives, periodic grids only.

The Dirac delta of the continuum theory is represented as
(Kronecker delta) / cell_volume, so quadrature of a "diagonal kernel"
against a field reproduces pointwise values.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import FieldError, GridError

logger = logging.getLogger("probability_geometry.grid")


BOUNDARY_MODES = ("periodic", "vanishing")
SCHEMES = ("central", "spectral")
MAX_DIM = 3
MIN_POINTS = 8

# === CENTRAL STENCILS ===
# First derivative: f'_i = sum_k w_k (f_{i+k} - f_{i-k}) / dx
FIRST_DERIVATIVE_WEIGHTS = {
    2: (1.0 / 2.0,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
    8: (4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0),
}

# Second derivative: f''_i = (c0 f_i + sum_k w_k (f_{i+k} + f_{i-k})) / dx^2
SECOND_DERIVATIVE_WEIGHTS = {
    2: (-2.0, (1.0,)),
    4: (-5.0 / 2.0, (4.0 / 3.0, -1.0 / 12.0)),
    6: (-49.0 / 18.0, (3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0)),
    8: (-205.0 / 72.0, (8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0)),
}


@dataclass(frozen=True)
class GridSpec:
    """A uniform box grid. Point i on axis k sits at lower[k] + i * spacing[k]."""

    dim: int
    extents: tuple
    points: tuple
    boundary: str = "periodic"
    lower: tuple = None
    scheme: str = "central"
    stencil_order: int = 2

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or not 1 <= self.dim <= MAX_DIM:
            raise GridError(f"dim must be 1..{MAX_DIM}, got {self.dim!r}")

        extents = tuple(float(e) for e in np.broadcast_to(self.extents, (self.dim,)))
        points = tuple(int(n) for n in np.broadcast_to(self.points, (self.dim,)))
        if self.lower is None:
            lower = tuple(-e / 2.0 for e in extents)
        else:
            lower = tuple(float(x) for x in np.broadcast_to(self.lower, (self.dim,)))

        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lower", lower)

        for k, (length, n) in enumerate(zip(extents, points)):
            if n < MIN_POINTS:
                raise GridError(f"axis {k}: need at least {MIN_POINTS} points, got {n}")
            if not np.isfinite(length) or length <= 0:
                raise GridError(f"axis {k}: extent must be positive and finite, got {length}")

        if self.boundary not in BOUNDARY_MODES:
            raise GridError(f"Unknown boundary '{self.boundary}'. Use one of {BOUNDARY_MODES}")
        if self.scheme not in SCHEMES:
            raise GridError(f"Unknown scheme '{self.scheme}'. Use one of {SCHEMES}")
        if self.scheme == "spectral" and self.boundary != "periodic":
            raise GridError("Spectral derivatives need a periodic grid")
        if self.stencil_order not in FIRST_DERIVATIVE_WEIGHTS:
            raise GridError(
                f"stencil_order must be one of {sorted(FIRST_DERIVATIVE_WEIGHTS)}, "
                f"got {self.stencil_order}"
            )

    # --- Derived geometry ---

    @property
    def shape(self):
        return self.points

    @property
    def size(self):
        return int(np.prod(self.points))

    @property
    def spacing(self):
        return tuple(length / n for length, n in zip(self.extents, self.points))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def volume(self):
        return float(np.prod(self.extents))

    @property
    def periodic(self):
        return self.boundary == "periodic"

    @property
    def min_spacing(self):
        return min(self.spacing)

    def axis_coordinates(self, axis):
        """1D coordinate samples along one axis."""
        self.check_axis(axis)
        return self.lower[axis] + np.arange(self.points[axis]) * self.spacing[axis]

    def coordinate(self, axis):
        """Coordinate x_axis sampled on the full grid (shape == self.shape)."""
        axes = [self.axis_coordinates(k) for k in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")[axis]

    def mesh(self):
        """All coordinate arrays, indexing='ij'."""
        axes = [self.axis_coordinates(k) for k in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def center(self):
        return tuple(lo + length / 2.0 for lo, length in zip(self.lower, self.extents))

    def check_axis(self, axis):
        if not isinstance(axis, (int, np.integer)) or not 0 <= axis < self.dim:
            raise GridError(f"axis {axis!r} out of range for a {self.dim}-dimensional grid")

    def check_same(self, other):
        if other != self:
            raise GridError("Fields live on different grids")

    def describe(self):
        return (
            f"{self.dim}D {self.boundary} grid, points={self.points}, "
            f"extents={self.extents}, scheme={self.scheme}/{self.stencil_order}"
        )


# === ARRAY-LEVEL OPERATORS ===

def _along(ndim, axis, index):
    """Index tuple selecting `index` along one axis."""
    sl = [slice(None)] * ndim
    sl[axis] = index
    return tuple(sl)


def _wavenumbers(grid, axis, zero_nyquist):
    n = grid.points[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.spacing[axis])
    if zero_nyquist and n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * grid.dim
    shape[axis] = n
    return k.reshape(shape)


def wavenumber_squared(grid):
    """|k|^2 on the FFT grid, Nyquist modes included."""
    total = np.zeros([1] * grid.dim)
    for axis in range(grid.dim):
        total = total + _wavenumbers(grid, axis, zero_nyquist=False) ** 2
    return np.broadcast_to(total, grid.shape)


def fourier_shift_array(grid, values, shifts):
    """values(x - shifts) on a periodic grid by the shift theorem; shifts need not be whole cells."""
    if not grid.periodic:
        raise GridError("Fourier translation is only defined on periodic grids")
    shifts = np.broadcast_to(np.asarray(shifts, dtype=float), (grid.dim,))
    phase = np.zeros([1] * grid.dim)
    for axis, s in enumerate(shifts):
        phase = phase + _wavenumbers(grid, axis, zero_nyquist=False) * s
    moved = np.fft.ifftn(np.exp(-1j * phase) * np.fft.fftn(values))
    if np.iscomplexobj(values):
        return moved
    return moved.real


def _spectral(values, grid, axis, multiplier):
    transformed = np.fft.ifft(multiplier * np.fft.fft(values, axis=axis), axis=axis)
    if np.iscomplexobj(values):
        return transformed
    return transformed.real


def gradient_array(grid, values, axis):
    """d(values)/dx_axis on raw sample arrays."""
    grid.check_axis(axis)
    dx = grid.spacing[axis]

    if grid.scheme == "spectral":
        return _spectral(values, grid, axis, 1j * _wavenumbers(grid, axis, zero_nyquist=True))

    weights = FIRST_DERIVATIVE_WEIGHTS[grid.stencil_order]

    if grid.periodic:
        out = np.zeros_like(values)
        for k, w in enumerate(weights, start=1):
            out = out + w * (np.roll(values, -k, axis=axis) - np.roll(values, k, axis=axis))
        return out / dx

    # Vanishing: second-order one-sided at the very edge, second-order central
    # next to it, requested order everywhere the full stencil fits.
    out = np.gradient(values, dx, axis=axis, edge_order=2)
    r = len(weights)
    if r == 1:
        return out
    n = values.shape[axis]
    acc = np.zeros_like(values[_along(values.ndim, axis, slice(r, n - r))])
    for k, w in enumerate(weights, start=1):
        plus = values[_along(values.ndim, axis, slice(r + k, n - r + k))]
        minus = values[_along(values.ndim, axis, slice(r - k, n - r - k))]
        acc = acc + w * (plus - minus)
    out[_along(values.ndim, axis, slice(r, n - r))] = acc / dx
    return out


def second_derivative_array(grid, values, axis):
    """d^2(values)/dx_axis^2 on raw sample arrays."""
    grid.check_axis(axis)
    dx = grid.spacing[axis]

    if grid.scheme == "spectral":
        k = _wavenumbers(grid, axis, zero_nyquist=False)
        return _spectral(values, grid, axis, -(k ** 2))

    center, weights = SECOND_DERIVATIVE_WEIGHTS[grid.stencil_order]

    if grid.periodic:
        out = center * values
        for k, w in enumerate(weights, start=1):
            out = out + w * (np.roll(values, -k, axis=axis) + np.roll(values, k, axis=axis))
        return out / dx ** 2

    r = len(weights)
    pad = [(0, 0)] * values.ndim
    pad[axis] = (r, r)
    padded = np.pad(values, pad, mode="constant")
    n = values.shape[axis]
    out = center * values
    for k, w in enumerate(weights, start=1):
        plus = padded[_along(values.ndim, axis, slice(r + k, r + k + n))]
        minus = padded[_along(values.ndim, axis, slice(r - k, r - k + n))]
        out = out + w * (plus + minus)
    return out / dx ** 2


def laplacian_array(grid, values):
    out = np.zeros_like(values)
    for axis in range(grid.dim):
        out = out + second_derivative_array(grid, values, axis)
    return out


def laplacian_spectral_radius(grid):
    """Largest |eigenvalue| of the discrete Laplacian: sum over axes of the stencil symbol at the Nyquist mode.

    4/dx^2 per axis for order-2 stencils, up to (pi/dx)^2 for spectral derivatives.
    """
    if grid.scheme == "spectral":
        return sum((np.pi / dx) ** 2 for dx in grid.spacing)
    center, weights = SECOND_DERIVATIVE_WEIGHTS[grid.stencil_order]
    nyquist = abs(center + 2.0 * sum(w * (-1) ** k for k, w in enumerate(weights, start=1)))
    return sum(nyquist / dx ** 2 for dx in grid.spacing)


def integrate_array(grid, values):
    """Cell-volume quadrature: dV * sum(values)."""
    if not np.all(np.isfinite(values)):
        raise FieldError("Cannot integrate non-finite samples")
    return grid.cell_volume * np.sum(values)


# === FIELD-LEVEL OPERATORS ===
# Fields are any objects with .grid, .values and .with_values(array).

def gradient(f, axis):
    """Central (or spectral) approximation of df/dx_axis."""
    return f.with_values(gradient_array(f.grid, f.values, axis))


def laplacian(f):
    """Sum of second derivatives over all axes."""
    return f.with_values(laplacian_array(f.grid, f.values))


def integrate(f):
    """Integral of a field over the box."""
    total = integrate_array(f.grid, f.values)
    if np.iscomplexobj(total):
        return complex(total)
    return float(total)


def translate(f, shifts):
    """Periodic grid translation: returns g with g(x) = f(x + shifts * dx)."""
    if not f.grid.periodic:
        raise GridError("Grid translation is only defined on periodic grids")
    shifts = tuple(int(s) for s in np.broadcast_to(shifts, (f.grid.dim,)))
    return f.with_values(np.roll(f.values, tuple(-s for s in shifts), axis=tuple(range(f.grid.dim))))


# === SPARSE OPERATORS ===

def _second_derivative_matrix_1d(n, dx, order, periodic):
    center, weights = SECOND_DERIVATIVE_WEIGHTS[order]
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    data = [np.full(n, center)]
    idx = np.arange(n)
    for k, w in enumerate(weights, start=1):
        for offset in (k, -k):
            target = idx + offset
            if periodic:
                keep = np.ones(n, dtype=bool)
                target = target % n
            else:
                keep = (target >= 0) & (target < n)
            rows.append(idx[keep])
            cols.append(target[keep])
            data.append(np.full(int(keep.sum()), w))
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return matrix.tocsr() / dx ** 2


def laplacian_matrix(grid):
    """Sparse Laplacian acting on C-ordered flattened samples.

    Matches laplacian_array exactly for the central scheme.
    """
    if grid.scheme != "central":
        raise GridError("laplacian_matrix is only available for the central scheme")

    total = sparse.csr_matrix((grid.size, grid.size))
    for axis in range(grid.dim):
        block = _second_derivative_matrix_1d(
            grid.points[axis], grid.spacing[axis], grid.stencil_order, grid.periodic
        )
        before = int(np.prod(grid.points[:axis]))
        after = int(np.prod(grid.points[axis + 1:]))
        term = sparse.kron(sparse.identity(before), sparse.kron(block, sparse.identity(after)))
        total = total + term
    return total.tocsc()
