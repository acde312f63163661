from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..models import GridSpec


@dataclass(frozen=True)
class SolutionGrid:
    """
    Sampled matrix-valued field over a 1-D or 2-D grid.

    values has shape (nx, r, c) on 1-D grids and (nt, nx, r, c) on 2-D grids.
    NaN samples mark flagged points (singularities). `components` holds extra
    scalar fields on the same grid, keyed by column label.
    """
    system: str
    grid: GridSpec
    values: NDArray[np.complex128]
    components: dict[str, NDArray[np.float64]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.grid.is_2d

    @property
    def entry_shape(self) -> tuple[int, int]:
        return self.values.shape[-2:]

    @property
    def flagged(self) -> NDArray[np.bool_]:
        """Mask of samples emitted as non-finite."""
        axes = tuple(range(self.values.ndim - 2, self.values.ndim))
        return ~np.all(np.isfinite(self.values), axis=axes)

    def scalar(self, i: int = 0, j: int = 0) -> NDArray[np.complex128]:
        """One matrix entry as a grid-shaped array."""
        return self.values[..., i, j]

    def coarsened(self) -> "SolutionGrid":
        """Every other sample along each axis, on grid.coarsened()."""
        grid = self.grid.coarsened()
        step = (slice(None, None, 2),) * (2 if self.is_2d else 1)
        return SolutionGrid(
            system=self.system,
            grid=grid,
            values=self.values[step],
            components={k: v[step] for k, v in self.components.items()},
            metadata=dict(self.metadata),
        )
