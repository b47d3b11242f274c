"""Coexistence classification of derived-surface facets and the
generalized phase rule.

Every hull facet touches each participating primitive surface at a vertex,
so the number of coexisting phases P is the number of distinct labels among
its d vertices, and the tangent tilt freedom is F = W - P + 1. Facets with
a single label are normally discretization artifacts of a convex surface;
they are promoted to coexistence when an edge is much longer than the local
sampling spacing (an intra-phase miscibility gap, as in a double well).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cloud import DEFAULT_TOLERANCE
from .errors import ExceedsMaxCoexistence, GibbsdError, OutsideSimplex
from .hull import LowerHull, barycentric_coordinates

#: Intra-phase facets with an edge longer than this multiple of the local
#: sampling spacing are classified as coexistence (miscibility gap). The
#: main numerical knob of the classifier.
DEFAULT_SPACING_THRESHOLD = 3.0

#: Relative singular-value cutoff for the empirical rank of a gradient
#: family. Discretization scatter on desk-scale grids sits around 1e-2,
#: while genuinely F-dimensional families fill at 0.5 and above.
DEFAULT_RANK_TOLERANCE = 0.05

KIND_INTRA = "intra-phase"
KIND_COEXISTENCE = "coexistence"


def generalized_phase_rule(pairs: int, phases: int) -> int:
    """Degrees of freedom F = W - P + 1 for W work pairs and P phases."""
    if pairs < 1:
        raise GibbsdError(f"need at least one work pair, got {pairs}")
    if phases < 1:
        raise GibbsdError(f"need at least one phase, got {phases}")
    if phases > pairs + 1:
        raise ExceedsMaxCoexistence(
            f"{phases} phases cannot coexist with {pairs} work pairs "
            f"(maximum is d = {pairs + 1})"
        )
    return pairs - phases + 1


def classic_rule_equivalence(components: int) -> dict:
    """Work-pair count reproducing the classic rule F = C - P + 2.

    C chemical pairs plus the thermal and pressure-volume pairs, minus one
    for the affine composition constraint, give W = C + 1. The returned
    mapping lists F for every admissible P and is checked against the
    generalized rule.
    """
    if components < 1:
        raise GibbsdError(f"need at least one component, got {components}")
    pairs = components + 1
    dof_by_phases = {}
    for p in range(1, pairs + 2):
        classic = components - p + 2
        if p <= pairs + 1:
            assert generalized_phase_rule(pairs, p) == classic
        dof_by_phases[p] = classic
    return {"components": components, "pairs": pairs, "dof_by_phases": dof_by_phases}


def extensive_dof(pairs: int, intensive_axes: int) -> int:
    """Extensive degrees of freedom F_X = W - I on a diagram with I
    intensive axes."""
    if not 0 <= intensive_axes <= pairs:
        raise GibbsdError(f"need 0 <= I <= W, got I={intensive_axes}, W={pairs}")
    return pairs - intensive_axes


@dataclass(frozen=True)
class CoexistenceSimplex:
    """A hull facet annotated with its phase content and tangent data."""

    facet_id: int
    vertex_indices: tuple
    vertex_coords: tuple
    vertex_labels: tuple  # label of each vertex, aligned with vertex_coords
    phase_multiset: tuple  # the same labels, sorted
    distinct_phases: int  # P
    intensive: tuple  # raw facet gradient Y
    dof: int  # F = W - P + 1
    kind: str

    @property
    def distinct_labels(self) -> tuple:
        return tuple(sorted(set(self.phase_multiset)))


@dataclass(frozen=True)
class CoexistenceReport:
    """Classification of every facet of a hull, exactly once."""

    pairs: int  # W
    variable_names: tuple
    simplices: tuple
    groups: dict  # distinct-label tuple -> tuple of facet ids
    metastable_indices: tuple
    counts_by_phases: dict  # P -> number of facets
    coincident_warnings: tuple
    spacing_threshold: float

    def simplices_for(self, labels) -> tuple:
        key = tuple(sorted(labels))
        return tuple(
            s for s in self.simplices if s.facet_id in self.groups.get(key, ())
        )


def _local_spacing(coords, labels):
    """Nearest same-phase neighbor distance per point (sampling spacing)."""
    n = len(coords)
    spacing = np.full(n, np.inf)
    by_label = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    for idx in by_label.values():
        pts = coords[idx]
        if len(idx) < 2:
            continue
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=-1))
        np.fill_diagonal(dist, np.inf)
        dist[dist == 0.0] = np.inf  # duplicate samples carry no spacing signal
        spacing[idx] = dist.min(axis=1)
    return spacing


def classify_facets(
    hull: LowerHull, spacing_threshold: float = DEFAULT_SPACING_THRESHOLD
) -> CoexistenceReport:
    """Annotate each facet with P, F, tangent gradient and kind."""
    if spacing_threshold <= 0.0:
        raise GibbsdError("spacing_threshold must be positive")
    cloud = hull.cloud
    w = cloud.w
    pos_of = {p.index: i for i, p in enumerate(cloud.points)}
    coords = cloud.coords()
    labels = cloud.labels()
    spacing = _local_spacing(coords, labels)

    simplices = []
    groups = {}
    counts = Counter()
    for fid, facet in enumerate(hull.facets):
        verts = facet.vertex_indices
        vlabels = tuple(labels[pos_of[i]] for i in verts)
        p = len(set(vlabels))
        if p > w + 1:
            raise ExceedsMaxCoexistence(
                f"facet {fid} carries {p} phases in W={w}"
            )  # structurally impossible for simplicial facets
        kind = KIND_COEXISTENCE if p >= 2 else KIND_INTRA
        if p == 1:
            vpos = [pos_of[i] for i in verts]
            for a in range(len(vpos)):
                for b in range(a + 1, len(vpos)):
                    edge = np.linalg.norm(coords[vpos[a]] - coords[vpos[b]])
                    ref = max(spacing[vpos[a]], spacing[vpos[b]])
                    if np.isfinite(ref) and edge > spacing_threshold * ref:
                        kind = KIND_COEXISTENCE
                        break
                if kind == KIND_COEXISTENCE:
                    break
        dof = generalized_phase_rule(w, p)
        simplices.append(
            CoexistenceSimplex(
                facet_id=fid,
                vertex_indices=verts,
                vertex_coords=tuple(tuple(coords[pos_of[i]]) for i in verts),
                vertex_labels=vlabels,
                phase_multiset=tuple(sorted(vlabels)),
                distinct_phases=p,
                intensive=facet.hyperplane.gradient,
                dof=dof,
                kind=kind,
            )
        )
        key = tuple(sorted(set(vlabels)))
        groups.setdefault(key, []).append(fid)
        counts[p] += 1

    warnings = _coincident_warnings(hull, simplices)
    return CoexistenceReport(
        pairs=w,
        variable_names=tuple(v.name for v in cloud.variables),
        simplices=tuple(simplices),
        groups={k: tuple(v) for k, v in sorted(groups.items())},
        metastable_indices=hull.metastable_indices,
        counts_by_phases=dict(sorted(counts.items())),
        coincident_warnings=warnings,
        spacing_threshold=spacing_threshold,
    )


def _coincident_warnings(hull, simplices):
    """Groups of facets whose tangent gradients agree within tolerance while
    their union carries more than d distinct labels: a coincident-tangent
    degeneracy that the perturbation policy split into adjacent simplices.
    Reported rather than silently under-counting P."""
    d = hull.cloud.dimension
    grads = np.array([s.intensive for s in simplices])
    if not len(grads):
        return ()
    scale = max(np.abs(grads).max(), 1.0)
    order = sorted(range(len(simplices)), key=lambda i: tuple(grads[i]))
    warnings = []
    used = np.zeros(len(simplices), dtype=bool)
    for i in order:
        if used[i] or simplices[i].distinct_phases < 2:
            continue
        close = [
            j
            for j in range(len(simplices))
            if simplices[j].distinct_phases >= 2
            and np.abs(grads[j] - grads[i]).max() <= hull.tolerance * scale * 100.0
        ]
        if len(close) < 2:
            continue
        union = sorted({lab for j in close for lab in simplices[j].distinct_labels})
        if len(union) > d:
            for j in close:
                used[j] = True
            warnings.append(
                {
                    "kind": "coincident coexistence",
                    "facets": tuple(simplices[j].facet_id for j in close),
                    "labels": tuple(union),
                    "gradient": tuple(float(v) for v in grads[i]),
                }
            )
    return tuple(warnings)


def lever_rule(simplex: CoexistenceSimplex, target_x, tolerance=DEFAULT_TOLERANCE) -> dict:
    """Phase fractions at an overall extensive state inside a coexistence
    simplex: the barycentric weights of the target, summed per phase."""
    weights = barycentric_coordinates(simplex.vertex_coords, target_x, tolerance)
    if weights.min() < -tolerance * 10.0:
        raise OutsideSimplex(
            f"target outside the simplex (weight {weights.min():.3e})"
        )
    weights = np.clip(weights, 0.0, None)
    weights = weights / weights.sum()
    fractions = {}
    for lab, wgt in zip(simplex.vertex_labels, weights):
        fractions[lab] = fractions.get(lab, 0.0) + float(wgt)
    return fractions


class DofEstimate(NamedTuple):
    value: int
    confident: bool


def empirical_dof(
    report: CoexistenceReport, labels, rank_tolerance: float = DEFAULT_RANK_TOLERANCE
) -> DofEstimate:
    """Measured tilt freedom of a coexistence family: the affine rank of the
    facet gradients sharing the label set, treating singular values below
    rank_tolerance times the largest as zero. Estimates F; diagnostic only.
    """
    members = report.simplices_for(labels)
    if len(members) < 2:
        return DofEstimate(value=0, confident=False)
    grads = np.array([s.intensive for s in members])
    centered = grads - grads.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[0] == 0.0:
        return DofEstimate(value=0, confident=True)
    return DofEstimate(
        value=int(np.sum(svals > rank_tolerance * svals[0])), confident=True
    )
