"""Small raster-drawing helper for authoring fixture worlds in meters."""

from __future__ import annotations

import numpy as np

from ..world import OccupancyGrid


class Canvas:
    def __init__(self, width: float, height: float, resolution: float = 0.05):
        self.resolution = resolution
        nx = int(round(width / resolution))
        ny = int(round(height / resolution))
        self.cells = np.zeros((ny, nx), dtype=bool)
        xs = (np.arange(nx) + 0.5) * resolution
        ys = (np.arange(ny) + 0.5) * resolution
        self._cx, self._cy = np.meshgrid(xs, ys)
        self.border()

    def border(self, thickness: float = 0.1) -> Canvas:
        t = max(1, int(round(thickness / self.resolution)))
        self.cells[:t, :] = self.cells[-t:, :] = True
        self.cells[:, :t] = self.cells[:, -t:] = True
        return self

    def _mask_rect(self, x0, y0, x1, y1):
        x0, x1 = sorted((x0, x1))
        y0, y1 = sorted((y0, y1))
        return (self._cx >= x0) & (self._cx <= x1) & (self._cy >= y0) & (self._cy <= y1)

    def box(self, x0, y0, x1, y1) -> Canvas:
        self.cells |= self._mask_rect(x0, y0, x1, y1)
        return self

    def clear(self, x0, y0, x1, y1) -> Canvas:
        self.cells &= ~self._mask_rect(x0, y0, x1, y1)
        return self.border()

    def _mask_segment(self, a, b, half_width):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        ab = b - a
        t = ((self._cx - a[0]) * ab[0] + (self._cy - a[1]) * ab[1]) / float(ab @ ab)
        t = np.clip(t, 0.0, 1.0)
        px = a[0] + t * ab[0] - self._cx
        py = a[1] + t * ab[1] - self._cy
        return px * px + py * py <= half_width * half_width

    def wall(self, a, b, thickness: float = 0.1) -> Canvas:
        self.cells |= self._mask_segment(a, b, thickness / 2.0)
        return self

    def carve(self, a, b, width: float) -> Canvas:
        """Clear a straight corridor of the given width."""
        self.cells &= ~self._mask_segment(a, b, width / 2.0)
        return self.border()

    def fill(self) -> Canvas:
        self.cells[:] = True
        return self

    def grid(self) -> OccupancyGrid:
        return OccupancyGrid(self.cells.copy(), self.resolution)
