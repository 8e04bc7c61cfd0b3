import numpy as np
import pytest

from nlwlab.grid import FieldPair, Grid, SpectralField, fft_forward


def random_real_pair(grid: Grid, seed: int, band_mask=None) -> FieldPair:
    """Random real-valued (u0, u1), optionally band-limited to a mask."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(2):
        vals = rng.standard_normal(grid.shape)
        f = fft_forward(vals, grid)
        if band_mask is not None:
            f = SpectralField(grid, f.coeffs * band_mask)
        fields.append(f)
    return FieldPair(fields[0], fields[1])


@pytest.fixture
def grid4():
    return Grid(4, 16, 8.0)


@pytest.fixture
def grid2():
    return Grid(2, 32, 4.0)
