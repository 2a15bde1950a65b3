"""Discrete convolutions sum_w K(v - w) g(w) h^3 on a velocity grid.

Kernels live on the (2n-1)^3 lattice of pair separations. The FFT route
pads to (2n)^3, which is the smallest size free of wrap-around for the
outputs we keep.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import fft as sfft
from scipy import signal

from landau_fisher.grid import VelocityGrid


def worker_count() -> int:
    """FFT worker count from LF_THREADS, defaulting to every available core."""
    raw = os.environ.get("LF_THREADS", "").strip()
    if not raw:
        return -1
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"LF_THREADS must be a positive integer, got {raw!r}") from exc
    if val < 1:
        raise ValueError(f"LF_THREADS must be a positive integer, got {raw!r}")
    return val


class Convolver:
    def __init__(self, grid: VelocityGrid, method: str = "auto"):
        if method not in ("auto", "fft", "direct"):
            raise ValueError(f"unknown convolution method {method!r}")
        self.grid = grid
        self.n = grid.n
        self.pad = (2 * grid.n,) * 3
        if method == "auto":
            method = "direct" if grid.n <= 8 else "fft"
        self.method = method

    def _slice(self):
        n = self.n
        return (slice(n - 1, 2 * n - 1),) * 3

    def transform(self, kernel: np.ndarray):
        """Prepare a kernel for repeated use."""
        if kernel.shape != (2 * self.n - 1,) * 3:
            raise ValueError(f"kernel shape {kernel.shape} is not the separation lattice")
        if self.method == "direct":
            return np.asarray(kernel, dtype=float)
        return sfft.rfftn(kernel, s=self.pad, workers=worker_count())

    def transform_field(self, values: np.ndarray):
        if self.method == "direct":
            return np.asarray(values, dtype=float)
        return sfft.rfftn(values, s=self.pad, workers=worker_count())

    def apply(self, kernel_t, field_t) -> np.ndarray:
        """Convolve a prepared kernel with a prepared field."""
        h3 = self.grid.cell_volume
        if self.method == "direct":
            full = signal.convolve(field_t, kernel_t, mode="full", method="direct")
            return h3 * full[self._slice()]
        full = sfft.irfftn(kernel_t * field_t, s=self.pad, workers=worker_count())
        return h3 * full[self._slice()]

    def __call__(self, kernel: np.ndarray, values: np.ndarray) -> np.ndarray:
        return self.apply(self.transform(kernel), self.transform_field(values))


def direct_sum(grid: VelocityGrid, kernel: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Reference O(N^2) evaluation by explicit loops over output cells."""
    n = grid.n
    out = np.empty(grid.shape)
    flipped = kernel[::-1, ::-1, ::-1]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                # K(v_ijk - w) for all w is a window of the flipped kernel.
                window = flipped[n - 1 - i : 2 * n - 1 - i, n - 1 - j : 2 * n - 1 - j, n - 1 - k : 2 * n - 1 - k]
                out[i, j, k] = np.sum(window * values)
    return grid.cell_volume * out
