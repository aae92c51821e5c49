"""Periodic corner-staggered Cartesian grid topology.

Two interleaved meshes cover the box: primal cells and dual cells offset by
half a spacing in every direction.  Primal cell (i,j,k) spans
[x_min + i*dx, x_min + (i+1)*dx] x ...; dual cell (i,j,k) is shifted by
+dx/2 (it is centered on a primal cell corner).  Indices are 0-based and all
neighbor arithmetic wraps periodically.

Corner offsets m in {-1,+1}^3 identify the 8 opposite-staggering cells
overlapping a given cell.  The index conventions are:

    primal (i,j,k), offset m  ->  dual  at (i,j,k) + (m-1)/2   (so -1 or 0)
    dual   (i,j,k), offset m  ->  primal at (i,j,k) + (m+1)/2   (so 0 or +1)

Round trip with the negated offset returns the starting cell.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CORNERS", "StaggeredGrid", "corner_shift"]

# the 8 corner offsets, first component varying slowest
CORNERS = tuple(itertools.product((-1, 1), repeat=3))

PRIMAL = "primal"
DUAL = "dual"


def _opposite(staggering):
    if staggering == PRIMAL:
        return DUAL
    if staggering == DUAL:
        return PRIMAL
    raise ValueError(f"unknown staggering {staggering!r}")


def corner_shift(staggering, m):
    """Per-axis cell-index shift to the corner neighbor with offset m."""
    if staggering == PRIMAL:
        return tuple((mi - 1) // 2 for mi in m)
    if staggering == DUAL:
        return tuple((mi + 1) // 2 for mi in m)
    raise ValueError(f"unknown staggering {staggering!r}")


@dataclass(frozen=True)
class StaggeredGrid:
    bounds: tuple  # (x_min, x_max, y_min, y_max, z_min, z_max)
    counts: tuple  # (Nx, Ny, Nz)
    spacings: tuple = field(init=False)
    cell_volume: float = field(init=False)

    def __post_init__(self):
        if len(self.bounds) != 6 or len(self.counts) != 3:
            raise ValueError("bounds must have 6 entries and counts 3")
        if any(n < 1 for n in self.counts):
            raise ValueError(f"cell counts must be positive, got {self.counts}")
        dx = tuple((self.bounds[2 * i + 1] - self.bounds[2 * i]) / self.counts[i]
                   for i in range(3))
        if any(d <= 0 for d in dx):
            raise ValueError("domain bounds must have positive extent")
        object.__setattr__(self, "spacings", dx)
        object.__setattr__(self, "cell_volume", dx[0] * dx[1] * dx[2])

    @classmethod
    def cube(cls, lo, hi, n):
        return cls((lo, hi) * 3, (n, n, n))

    @property
    def ncells(self):
        return self.counts[0] * self.counts[1] * self.counts[2]

    def wrap(self, index):
        return tuple(index[i] % self.counts[i] for i in range(3))

    def corner_neighbor(self, staggering, index, m):
        """Opposite-staggering cell at corner offset m (periodic)."""
        sh = corner_shift(staggering, m)
        return _opposite(staggering), self.wrap(tuple(index[i] + sh[i] for i in range(3)))

    def origin(self, staggering):
        """Physical coordinates of the low corner of cell (0,0,0)."""
        off = 0.0 if staggering == PRIMAL else 0.5
        return tuple(self.bounds[2 * i] + off * self.spacings[i] for i in range(3))

    def ref_coords(self, staggering, index, x):
        """Affine map of physical point x into cell-local (xi, eta, zeta)."""
        o = self.origin(staggering)
        return tuple((x[i] - (o[i] + index[i] * self.spacings[i])) / self.spacings[i]
                     for i in range(3))

    def cell_low_corner(self, staggering, index):
        o = self.origin(staggering)
        return tuple(o[i] + index[i] * self.spacings[i] for i in range(3))

    def node_location(self, staggering, index, basis, flat):
        """Physical coordinates of nodal point `flat` of the given cell."""
        l123 = basis.tensor_index(flat)
        lo = self.cell_low_corner(staggering, index)
        return tuple(lo[i] + basis.nodes[l123[i]] * self.spacings[i] for i in range(3))

    def axis_coords(self, staggering, basis, axis):
        """All nodal coordinates along one axis, shape (count, N+1).

        Row i holds the physical positions of the 1D nodes of cell-slab i;
        together with the other two axes this spans every node of the grid.
        """
        o = self.origin(staggering)[axis]
        idx = np.arange(self.counts[axis])
        return o + (idx[:, None] + basis.nodes[None, :]) * self.spacings[axis]
