import numpy as np

from data_model.errors import ValidationError


def grid_size(length_s, rate_hz):
    return int(round(length_s * rate_hz))


def resample_to_grid(series, start_s, length_s, rate_hz):
    """
    Bin the samples of a series onto the regular grid t_i = start_s + i / rate_hz.

    Each sample goes to its nearest grid point (ties round up); a grid point
    holding several samples keeps the closest one. Empty grid points are NaN.
    Returns (grid, coverage) with coverage = filled / expected grid points.
    """
    if rate_hz <= 0 or length_s <= 0:
        raise ValidationError("Grid rate and length must be positive")
    size = grid_size(length_s, rate_hz)
    grid = np.full(size, np.nan)
    half_bin = 0.5 / rate_hz
    lo = np.searchsorted(series.timestamps, start_s - half_bin, side="left")
    hi = np.searchsorted(series.timestamps, start_s + length_s - half_bin, side="left")
    if hi <= lo:
        return grid, 0.0

    times = series.timestamps[lo:hi]
    values = series.values[lo:hi]
    position = (times - start_s) * rate_hz
    index = np.floor(position + 0.5).astype(int)
    inside = (index >= 0) & (index < size)
    index, values, distance = index[inside], values[inside], np.abs(position[inside] - index[inside])

    # closest sample per grid point: sort by (index, distance) and keep the first of each index
    order = np.lexsort((distance, index))
    unique_index, first = np.unique(index[order], return_index=True)
    grid[unique_index] = values[order][first]
    return grid, unique_index.size / size


def impute(grid):
    """
    Fill missing (NaN) grid points: interior gaps by linear interpolation over
    the sample index, leading gaps by backward fill, trailing gaps by forward fill.
    """
    grid = np.asarray(grid, dtype=float)
    present = np.flatnonzero(~np.isnan(grid))
    if present.size == 0:
        raise ValidationError("Cannot impute a grid without any present sample")
    if present.size == grid.size:
        return grid.copy()
    # np.interp holds the edge values constant outside the present range
    return np.interp(np.arange(grid.size), present, grid[present])
