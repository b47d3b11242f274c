"""Labeled point clouds sampling internal-energy surfaces.

A cloud holds samples of one or more primitive surfaces: for each sample,
W extensive coordinates, a scalar internal energy, and a phase label.
Raw clouds always carry extensive axes; intensive axes only ever appear
in diagrams, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionTooHigh, ValidationError

EXTENSIVE = "extensive"
INTENSIVE = "intensive"

#: Hard cap on the number of work dimensions (d = W + 1 <= 9).
MAX_WORK_DIMENSIONS = 8

#: Default relative tolerance for all on-plane tests, scaled by the
#: per-axis bounding box of the cloud.
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Axis:
    """Descriptor for one thermodynamic axis."""

    name: str
    kind: str = EXTENSIVE
    unit: str = ""

    def __post_init__(self):
        if self.kind not in (EXTENSIVE, INTENSIVE):
            raise ValidationError(f"unknown axis kind {self.kind!r}", path="/variables")


@dataclass(frozen=True)
class LabeledPoint:
    """One sample of a primitive surface."""

    x: tuple
    energy: float
    phase: str
    index: int

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "energy", float(self.energy))
        if not all(math.isfinite(v) for v in self.x):
            raise ValidationError("non-finite coordinate", path=f"/points/{self.index}/x")
        if not math.isfinite(self.energy):
            raise ValidationError("non-finite energy", path=f"/points/{self.index}/energy")


@dataclass(frozen=True)
class PointCloud:
    """An immutable set of labeled energy samples in W extensive dimensions."""

    variables: tuple
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "points", tuple(self.points))
        w = len(self.variables)
        if w > MAX_WORK_DIMENSIONS:
            raise DimensionTooHigh(
                f"W={w} exceeds the cap of {MAX_WORK_DIMENSIONS} work dimensions"
            )
        for axis in self.variables:
            if axis.kind != EXTENSIVE:
                raise ValidationError(
                    f"raw cloud axis {axis.name!r} must be extensive", path="/variables"
                )
        seen = set()
        for i, p in enumerate(self.points):
            if len(p.x) != w:
                raise ValidationError(
                    f"point has {len(p.x)} coordinates, expected {w}", path=f"/points/{i}/x"
                )
            if p.index in seen:
                raise ValidationError("duplicate point index", path=f"/points/{i}/index")
            seen.add(p.index)

    @property
    def w(self) -> int:
        """Number of extensive work coordinates."""
        return len(self.variables)

    @property
    def dimension(self) -> int:
        """Ambient dimension d = W + 1 of the lifted energy space."""
        return self.w + 1

    def coords(self) -> np.ndarray:
        """(n, W) array of extensive coordinates, ordered by point index."""
        return np.array([p.x for p in self.points], dtype=float)

    def energies(self) -> np.ndarray:
        return np.array([p.energy for p in self.points], dtype=float)

    def labels(self) -> list:
        return [p.phase for p in self.points]

    def point_by_index(self, index: int) -> LabeledPoint:
        return self._index_map()[index]

    def _index_map(self):
        if not hasattr(self, "_imap"):
            object.__setattr__(self, "_imap", {p.index: p for p in self.points})
        return self._imap


def make_cloud(variables, coords, energies, phases) -> PointCloud:
    """Assemble a cloud with sequential point indices 0..n-1."""
    axes = tuple(a if isinstance(a, Axis) else Axis(str(a)) for a in variables)
    pts = tuple(
        LabeledPoint(x=tuple(c), energy=e, phase=str(ph), index=i)
        for i, (c, e, ph) in enumerate(zip(coords, energies, phases))
    )
    return PointCloud(variables=axes, points=pts)


def affine_rank(coords: np.ndarray, tolerance: float) -> int:
    """Affine rank of a coordinate set, with singular values below
    tolerance * largest treated as zero."""
    if len(coords) <= 1:
        return 0
    centered = coords - coords.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > tolerance * svals[0]))


def require_full_dimensional(cloud: PointCloud, tolerance: float = DEFAULT_TOLERANCE):
    """Raise DegenerateInput unless the cloud spans all W extensive dimensions
    with at least d = W + 1 affinely independent points."""
    if cloud.w == 0:
        raise DegenerateInput("cloud has no extensive axes to hull over")
    if len(cloud.points) < cloud.dimension:
        raise DegenerateInput(
            f"need at least {cloud.dimension} points, got {len(cloud.points)}"
        )
    if affine_rank(cloud.coords(), tolerance) < cloud.w:
        raise DegenerateInput("points are affinely dependent in extensive space")
