"""Planar RIS array geometry and unit-cell bookkeeping.

Frame convention used throughout the package: the array lies in the x-y
plane, boresight is +z, the column index grows with +x and the row index
with +y. Positions are centred on the array centroid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .errors import ConfigInvalid, InvalidArgument

DEFAULT_ROWS = 12
DEFAULT_COLS = 82
DEFAULT_PITCH = 0.014  # m, 14.0 x 14.0 mm unit cell
DEFAULT_LEAK_CURRENT = 1e-15  # A per cell


@dataclass(frozen=True)
class UnitCell:
    index: int
    row: int
    col: int
    position: tuple[float, float]
    quadrant: int


@dataclass(frozen=True)
class ArrayGeometry:
    rows: int
    cols: int
    pitch: float
    cells: tuple[UnitCell, ...] = field(repr=False)
    quadrant_sizes: tuple[int, int, int, int]
    # vectorised views, (N, 3) positions with z = 0 and (N,) quadrant ids
    positions: np.ndarray = field(repr=False, compare=False)
    quadrants: np.ndarray = field(repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def quadrant_indices(self, quadrant: int) -> np.ndarray:
        return np.flatnonzero(self.quadrants == quadrant)

    def to_grid(self, values: Sequence[float]) -> np.ndarray:
        """Reshape a per-cell vector into a (rows, cols) matrix."""
        values = np.asarray(values)
        if values.shape[0] != self.n_cells:
            raise InvalidArgument(
                f"expected {self.n_cells} values, got {values.shape[0]}")
        return values.reshape(self.rows, self.cols)


def _block_quadrants(rows: int, cols: int) -> np.ndarray:
    # remainder row/col goes to the lower-index block
    row_split = (rows + 1) // 2
    col_split = (cols + 1) // 2
    r = np.arange(rows)[:, None] >= row_split
    c = np.arange(cols)[None, :] >= col_split
    return (2 * r + c).astype(int).ravel()


def build_geometry(rows: int = DEFAULT_ROWS, cols: int = DEFAULT_COLS,
                   pitch: float = DEFAULT_PITCH,
                   quadrant_map: Sequence[int] | None = None) -> ArrayGeometry:
    """Build a centred regular grid of unit cells.

    Cells are ordered row-major (``index = row * cols + col``). Unless an
    explicit ``quadrant_map`` is given, quadrants are the four rectangular
    blocks obtained by splitting rows and columns at their midpoints, numbered
    ``2 * row_block + col_block``.
    """
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise InvalidArgument(f"rows and cols must be positive integers, got {rows}x{cols}")
    if not np.isfinite(pitch) or pitch <= 0:
        raise InvalidArgument(f"pitch must be positive, got {pitch}")
    rows, cols, pitch = int(rows), int(cols), float(pitch)
    n = rows * cols

    if quadrant_map is None:
        quads = _block_quadrants(rows, cols)
    else:
        quads = np.asarray(quadrant_map, dtype=int)
        if quads.shape != (n,):
            raise InvalidArgument(f"quadrant_map needs {n} entries, got {quads.size}")
        if np.any((quads < 0) | (quads > 3)):
            raise InvalidArgument("quadrant_map entries must be in 0..3")

    x = (np.arange(cols) - (cols - 1) / 2.0) * pitch
    y = (np.arange(rows) - (rows - 1) / 2.0) * pitch
    xx, yy = np.meshgrid(x, y)
    positions = np.zeros((n, 3))
    positions[:, 0] = xx.ravel()
    positions[:, 1] = yy.ravel()
    positions.setflags(write=False)
    quads.setflags(write=False)

    cells = tuple(
        UnitCell(index=i, row=i // cols, col=i % cols,
                 position=(float(positions[i, 0]), float(positions[i, 1])),
                 quadrant=int(quads[i]))
        for i in range(n))
    sizes = tuple(int(np.count_nonzero(quads == q)) for q in range(4))
    return ArrayGeometry(rows, cols, pitch, cells, sizes, positions, quads)


def cell_position_3d(geometry: ArrayGeometry, index: int) -> np.ndarray:
    if not 0 <= index < geometry.n_cells:
        raise InvalidArgument(f"cell index {index} out of range [0, {geometry.n_cells})")
    return geometry.positions[index].copy()


def estimate_bias_power(voltages: Sequence[float], leak_current: float = DEFAULT_LEAK_CURRENT,
                        v_max: float | None = None) -> float:
    """Static varactor bias power, sum of V_n * I_leak, in watts."""
    v = np.asarray(voltages, dtype=float)
    if leak_current < 0:
        raise InvalidArgument("leak_current must be non-negative")
    if np.any(v < 0):
        raise InvalidArgument("negative bias voltage")
    if v_max is not None and np.any(v > v_max):
        raise InvalidArgument(f"bias voltage above v_max={v_max}")
    return float(np.sum(v) * leak_current)


def load_geometry(path: str | Path) -> ArrayGeometry:
    """Read a key-value geometry file (rows, cols, pitch_m, optional quadrant_map)."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return geometry_from_dict(data, source=str(path))


def geometry_from_dict(data, source: str = "<geometry>") -> ArrayGeometry:
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{source}: expected a mapping with rows, cols, pitch_m")
    unknown = set(data) - {"rows", "cols", "pitch_m", "quadrant_map"}
    if unknown:
        raise ConfigInvalid(f"{source}: unknown geometry keys {sorted(unknown)}")
    try:
        return build_geometry(int(data.get("rows", DEFAULT_ROWS)),
                              int(data.get("cols", DEFAULT_COLS)),
                              float(data.get("pitch_m", DEFAULT_PITCH)),
                              data.get("quadrant_map"))
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{source}: {exc}") from exc


def save_geometry(geometry: ArrayGeometry, path: str | Path, with_quadrants: bool = False) -> None:
    data = {"rows": geometry.rows, "cols": geometry.cols, "pitch_m": geometry.pitch}
    if with_quadrants:
        data["quadrant_map"] = [int(q) for q in geometry.quadrants]
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
