"""Flat parameter storage with named, shaped segments."""
from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np


class ParameterSet:
    """Ordered named arrays backed by one contiguous float64 vector.

    ``params["gnn/node_enc/0/w"]`` returns a writable view into ``flat``,
    so optimizers can work on ``flat`` directly.
    """

    def __init__(self, layout: Sequence[tuple[str, tuple[int, ...]]], flat: np.ndarray | None = None):
        names = [name for name, _ in layout]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.layout = [(name, tuple(int(d) for d in shape)) for name, shape in layout]
        self._offsets: dict[str, tuple[int, int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in self.layout:
            size = math.prod(shape)
            self._offsets[name] = (offset, size, shape)
            offset += size
        self.total_count = offset
        if flat is None:
            flat = np.zeros(offset)
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (offset,):
            raise ValueError(f"flat vector has shape {flat.shape}, layout needs ({offset},)")
        self.flat = flat

    def __getitem__(self, name: str) -> np.ndarray:
        offset, size, shape = self._offsets[name]
        return self.flat[offset : offset + size].reshape(shape)

    def __contains__(self, name: str) -> bool:
        return name in self._offsets

    def __iter__(self) -> Iterator[str]:
        return iter(self._offsets)

    def __len__(self) -> int:
        return len(self.layout)

    def segment(self, name: str) -> slice:
        offset, size, _ = self._offsets[name]
        return slice(offset, offset + size)

    def views(self, flat: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """Name -> view mapping over ``flat`` (defaults to this set's own vector)."""
        flat = self.flat if flat is None else flat
        return {name: flat[o : o + s].reshape(shape) for name, (o, s, shape) in self._offsets.items()}

    def unflatten(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.views(np.asarray(flat, dtype=np.float64)).items()}

    def with_flat(self, flat: np.ndarray) -> "ParameterSet":
        return ParameterSet(self.layout, np.array(flat, dtype=np.float64))

    def copy(self) -> "ParameterSet":
        return self.with_flat(self.flat)

    def zeros_like(self) -> "ParameterSet":
        return ParameterSet(self.layout)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "ParameterSet":
        layout = [(name, np.shape(arr)) for name, arr in arrays.items()]
        flat = np.concatenate([np.asarray(a, dtype=np.float64).ravel() for a in arrays.values()]) if arrays else None
        return cls(layout, flat)

    def same_layout(self, other: "ParameterSet") -> bool:
        return self.layout == other.layout
