"""Phase diagrams in user-chosen axes.

Extensive diagrams project facets onto extensive coordinates; intensive
diagrams map each facet to its tangent gradient (the Legendre-dual image),
where an F = 0 family collapses to a point and an F = 1 family traces a
curve; mixed diagrams take gradient components for the intensive axes and
the facet's projected extent for the extensive ones. Raw conjugates
Y = dU/dX are converted to conventional intensive values (T, P, ...) only
here, through the model's sign map.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .cloud import EXTENSIVE, INTENSIVE, PointCloud, Axis, make_cloud
from .coexistence import CoexistenceReport, KIND_COEXISTENCE
from .errors import (
    AxisUnknown,
    EmptySlice,
    GibbsdError,
    InconsistentConstraint,
    IOFailure,
    NonConvexTransform,
    UnsupportedAxisCount,
)
from .hull import LowerHull
from .models import AnalyticModel, ConjugatePair, evaluate_energy, gradient, hessian

DIAGRAM_SCHEMA = "gibbsd-diagram/1"

SVG_PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
)


@dataclass(frozen=True)
class DiagramAxis:
    """One diagram axis: an extensive hull variable, shown either directly
    or through its intensive conjugate."""

    variable: str
    representation: str
    label: str
    sign: int = 1

    def __post_init__(self):
        if self.representation not in (EXTENSIVE, INTENSIVE):
            raise GibbsdError(f"bad representation {self.representation!r}")


@dataclass(frozen=True)
class DiagramSpec:
    """Requested axes plus output geometry for rendering."""

    axes: tuple  # of (variable_name, representation) pairs
    resolution: tuple = (640, 480)
    bounds: tuple | None = None  # optional ((lo, hi), ...) per axis

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple((str(n), str(r)) for n, r in self.axes))
        if not self.axes:
            raise GibbsdError("diagram needs at least one axis")

    @property
    def intensive_count(self) -> int:
        return sum(1 for _, rep in self.axes if rep == INTENSIVE)


@dataclass(frozen=True)
class Region:
    """All cells sharing one phase multiset (and classification kind)."""

    labels: tuple
    kind: str
    cells: tuple  # of (facet_id, vertex-coordinate tuples)

    @property
    def display(self) -> str:
        return "+".join(self.labels)


@dataclass(frozen=True)
class Boundary:
    """Interface between two regions whose multisets differ."""

    left: tuple
    right: tuple
    points: tuple


@dataclass(frozen=True)
class PhaseDiagram:
    axes: tuple  # of DiagramAxis
    regions: tuple
    boundaries: tuple
    provenance: dict = field(default_factory=dict)

    def region(self, labels) -> Region:
        key = tuple(sorted(labels))
        for r in self.regions:
            if r.labels == key:
                return r
        raise GibbsdError(f"no region {key}")


def _resolve_axes(spec, variables, pairs, want):
    """Match spec axes against hull variables (and, through the conjugate
    pairs, intensive names); check representations against ``want``."""
    by_ext = {v.name: i for i, v in enumerate(variables)}
    by_int = {}
    pair_of = {}
    for p in pairs or ():
        by_int[p.intensive_name] = p.name
        pair_of[p.name] = p
    out = []
    for name, rep in spec.axes:
        ext = name if name in by_ext else by_int.get(name)
        if ext is None:
            raise AxisUnknown(f"axis {name!r} matches no hull variable")
        if want is not None and rep != want:
            raise GibbsdError(f"axis {name!r} must be {want} here, got {rep}")
        pair = pair_of.get(ext)
        if rep == INTENSIVE:
            label = pair.intensive_name if pair else f"Y[{ext}]"
            sign = pair.sign if pair else 1
        else:
            label, sign = ext, 1
        out.append((by_ext[ext], DiagramAxis(ext, rep, label, sign)))
    return out


def _group_regions(report, cell_of):
    """Regions keyed by (sorted distinct labels, kind); cells in facet order."""
    groups = {}
    for s in report.simplices:
        key = (s.distinct_labels, s.kind)
        groups.setdefault(key, []).append((s.facet_id, cell_of(s)))
    regions = [
        Region(labels=labels, kind=kind, cells=tuple(cells))
        for (labels, kind), cells in sorted(groups.items())
    ]
    return tuple(regions)


def _ridge_neighbors(report):
    """facet_id pairs sharing a (d-2)-face, from vertex index sets."""
    ridges = {}
    for s in report.simplices:
        for drop in s.vertex_indices:
            key = tuple(v for v in s.vertex_indices if v != drop)
            ridges.setdefault(key, []).append(s.facet_id)
    return ridges


def project_extensive(hull: LowerHull, report: CoexistenceReport, spec: DiagramSpec,
                      pairs=None) -> PhaseDiagram:
    """Facet projections onto extensive axes become cells; shared sub-faces
    between cells of different multisets become boundaries."""
    resolved = _resolve_axes(spec, hull.cloud.variables, pairs, want=EXTENSIVE)
    idx = [i for i, _ in resolved]
    axes = tuple(a for _, a in resolved)
    simplex_of = {s.facet_id: s for s in report.simplices}

    def cell(s):
        return (s.facet_id, tuple(tuple(v[i] for i in idx) for v in s.vertex_coords))

    regions = _group_regions(report, lambda s: cell(s)[1])

    boundaries = []
    for key, owners in sorted(_ridge_neighbors(report).items()):
        if len(owners) != 2:
            continue
        a, b = sorted(owners)
        sa, sb = simplex_of[a], simplex_of[b]
        if (sa.distinct_labels, sa.kind) == (sb.distinct_labels, sb.kind):
            continue
        pts = tuple(
            tuple(coord[i] for i in idx)
            for v, coord in zip(sa.vertex_indices, sa.vertex_coords)
            if v in key
        )
        boundaries.append(Boundary(left=sa.distinct_labels, right=sb.distinct_labels, points=pts))
    return PhaseDiagram(
        axes=axes,
        regions=regions,
        boundaries=tuple(boundaries),
        provenance={"kind": "extensive-projection", "facets": len(report.simplices)},
    )


def _family_polylines(members, report):
    """Order a coexistence family's facets into polylines by facet adjacency.
    Resolution-dependent; deterministic via smallest-id starts."""
    ids = [s.facet_id for s in members]
    idset = set(ids)
    adj = {i: set() for i in ids}
    for owners in _ridge_neighbors(report).values():
        inside = sorted(set(owners) & idset)
        for a in inside:
            for b in inside:
                if a != b:
                    adj[a].add(b)
    unvisited = set(ids)
    chains = []
    while unvisited:
        endpoints = sorted(i for i in unvisited if len(adj[i] & unvisited) <= 1)
        start = endpoints[0] if endpoints else min(unvisited)
        chain = [start]
        unvisited.discard(start)
        while True:
            nxt = sorted(adj[chain[-1]] & unvisited)
            if not nxt:
                break
            chain.append(nxt[0])
            unvisited.discard(nxt[0])
        chains.append(chain)
    return chains


def dual_intensive(report: CoexistenceReport, spec: DiagramSpec, pairs=None) -> PhaseDiagram:
    """Each facet maps to the single intensive point sign * Y on the chosen
    axes. Zero-freedom families appear as isolated points (triple points),
    one-freedom families as adjacency-ordered polylines, single-phase facets
    as scatter filling open regions."""
    variables = tuple(Axis(name) for name in report.variable_names)
    resolved = _resolve_axes(spec, variables, pairs, want=INTENSIVE)
    idx = [i for i, _ in resolved]
    axes = tuple(a for _, a in resolved)
    signs = [a.sign for a in axes]

    def image(s):
        return tuple(sg * s.intensive[i] for sg, i in zip(signs, idx))

    regions = _group_regions(report, lambda s: (image(s),))

    boundaries = []
    for labels, fids in sorted(report.groups.items()):
        members = [s for s in report.simplices if s.facet_id in set(fids)]
        if members[0].distinct_phases != 2:
            continue
        for chain in _family_polylines(members, report):
            by_id = {s.facet_id: s for s in members}
            pts = tuple(image(by_id[i]) for i in chain)
            left, right = (labels[0],), (labels[1],)
            boundaries.append(Boundary(left=left, right=right, points=pts))
    return PhaseDiagram(
        axes=axes,
        regions=regions,
        boundaries=tuple(boundaries),
        provenance={
            "kind": "intensive-dual",
            "note": "boundary polylines ordered by facet adjacency; resolution-dependent",
        },
    )


def mixed_axes(hull: LowerHull, report: CoexistenceReport, spec: DiagramSpec,
               pairs=None) -> PhaseDiagram:
    """Product map: intensive axes take the facet gradient, extensive axes
    take the facet's projected extent. A three-phase facet in (T, V) becomes
    a segment of constant T spanning the facet's V range."""
    resolved = _resolve_axes(spec, hull.cloud.variables, pairs, want=None)
    axes = tuple(a for _, a in resolved)

    def cell(s):
        verts = []
        for coord in s.vertex_coords:
            vertex = []
            for (i, axis) in resolved:
                if axis.representation == INTENSIVE:
                    vertex.append(axis.sign * s.intensive[i])
                else:
                    vertex.append(coord[i])
            verts.append(tuple(vertex))
        return tuple(verts)

    regions = _group_regions(report, cell)

    simplex_of = {s.facet_id: s for s in report.simplices}
    boundaries = []
    for key, owners in sorted(_ridge_neighbors(report).items()):
        if len(owners) != 2:
            continue
        a, b = sorted(owners)
        sa, sb = simplex_of[a], simplex_of[b]
        if (sa.distinct_labels, sa.kind) == (sb.distinct_labels, sb.kind):
            continue
        pts = []
        for s in (sa, sb):
            for v, coord in zip(s.vertex_indices, s.vertex_coords):
                if v in key:
                    vertex = []
                    for (i, axis) in resolved:
                        if axis.representation == INTENSIVE:
                            vertex.append(axis.sign * s.intensive[i])
                        else:
                            vertex.append(coord[i])
                    pts.append(tuple(vertex))
        boundaries.append(
            Boundary(left=sa.distinct_labels, right=sb.distinct_labels,
                     points=tuple(sorted(set(pts))))
        )
    return PhaseDiagram(
        axes=axes,
        regions=regions,
        boundaries=tuple(boundaries),
        provenance={"kind": "mixed-axes"},
    )


# ---------------------------------------------------------------------------
# Legendre transforms
# ---------------------------------------------------------------------------


def legendre_transform(model: AnalyticModel, phase: str, transform, y, x_rest) -> float:
    """inf over the transformed extensive variables of U - sum Y.X, with Y
    given as conventional intensive values (sign-mapped back to raw
    conjugates internally).

    Closed form for pure quadratic wells; damped Newton otherwise, converged
    to 1e-10 relative. Raises NonConvexTransform when the infimum is not
    attained at a unique stationary point.
    """
    names = [p.name for p in model.variables]
    transform = list(transform)
    unknown = [t for t in transform if t not in names]
    if unknown:
        raise AxisUnknown(f"unknown variables {unknown}")
    t_idx = [names.index(t) for t in transform]
    r_idx = [i for i in range(len(names)) if i not in t_idx]
    if len(y) != len(t_idx) or len(x_rest) != len(r_idx):
        raise GibbsdError("y / x_rest lengths do not match the transform set")
    sign = {p.name: p.sign for p in model.variables}
    y_raw = np.array([sign[t] * float(v) for t, v in zip(transform, y)])

    well = model.well(phase)
    x = np.zeros(len(names))
    x[r_idx] = x_rest

    h_full = np.asarray(well.curvature, dtype=float)
    h_tt = h_full[np.ix_(t_idx, t_idx)]
    if well.correction is None:
        if np.linalg.eigvalsh(h_tt).min() <= 0.0:
            raise NonConvexTransform(
                f"well {phase!r} is not convex in {transform}"
            )
        m = np.asarray(well.minimum)
        h_tr = h_full[np.ix_(t_idx, r_idx)]
        rhs = y_raw - h_tr @ (x[r_idx] - m[r_idx])
        x[t_idx] = m[t_idx] + np.linalg.solve(h_tt, rhs)
        return float(evaluate_energy(model, phase, x) - y_raw @ x[t_idx])

    # quartic correction: damped Newton on the transformed coordinates
    x[t_idx] = np.asarray(well.minimum)[t_idx]
    scale = max(1.0, np.abs(y_raw).max())
    for _ in range(200):
        g = gradient(model, phase, x)[t_idx] - y_raw
        if np.abs(g).max() <= 1e-12 * scale:
            break
        h = hessian(model, phase, x)[np.ix_(t_idx, t_idx)]
        evals = np.linalg.eigvalsh(h)
        if evals.min() <= 0.0:
            h = h + (abs(evals.min()) + 1e-6) * np.eye(len(t_idx))
        step = np.linalg.solve(h, g)
        target = evaluate_energy(model, phase, x) - y_raw @ x[t_idx]
        alpha = 1.0
        for _ in range(60):
            trial = x.copy()
            trial[t_idx] = x[t_idx] - alpha * step
            val = evaluate_energy(model, phase, trial) - y_raw @ trial[t_idx]
            if val < target + 1e-18:
                x = trial
                break
            alpha *= 0.5
        else:
            raise NonConvexTransform("line search failed to descend")
    else:
        raise NonConvexTransform("Newton iteration did not converge")
    if np.linalg.eigvalsh(hessian(model, phase, x)[np.ix_(t_idx, t_idx)]).min() <= 0.0:
        raise NonConvexTransform("infimum is not at a convex stationary point")
    return float(evaluate_energy(model, phase, x) - y_raw @ x[t_idx])


# ---------------------------------------------------------------------------
# isopleth slicing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsoplethConstraint:
    """Affine equality constraints A x = b on extensive coordinates."""

    matrix: tuple  # r rows of W coefficients
    offsets: tuple
    tolerance: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in self.matrix))
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))
        if len(self.matrix) != len(self.offsets):
            raise InconsistentConstraint("one offset per constraint row required")


def slice_isopleth(cloud: PointCloud, constraint: IsoplethConstraint) -> PointCloud:
    """Sub-cloud satisfying the constraints, re-parameterized in intrinsic
    coordinates of the constraint subspace (any subset of a convex hull is
    again a convex hull, so the result is ready for re-hulling)."""
    rows = len(constraint.matrix)
    if rows == 0:
        return cloud
    a = np.asarray(constraint.matrix, dtype=float)
    b = np.asarray(constraint.offsets, dtype=float)
    w = cloud.w
    if a.shape[1] != w:
        raise InconsistentConstraint(f"constraint has {a.shape[1]} columns, cloud has {w}")
    svals = np.linalg.svd(a, compute_uv=False)
    if rows > w or svals[-1] <= constraint.tolerance * svals[0]:
        raise InconsistentConstraint("constraint rows are linearly dependent")

    coords = cloud.coords()
    scale = max(np.abs(coords).max(), np.abs(b).max(), 1.0)
    residual = np.abs(a @ coords.T - b[:, None]).max(axis=0)
    row_norms = np.linalg.norm(a, axis=1).max()
    keep = residual <= constraint.tolerance * scale * max(row_norms, 1.0) * 10.0
    selected = [p for p, ok in zip(cloud.points, keep) if ok]

    d_intrinsic = w - rows
    if len(selected) < d_intrinsic + 1:
        raise EmptySlice(
            f"{len(selected)} points satisfy the constraint, need {d_intrinsic + 1}"
        )

    x0, *_ = np.linalg.lstsq(a, b, rcond=None)
    _, _, vh = np.linalg.svd(a)
    basis = vh[rows:].T  # orthonormal null-space basis, (w, d_intrinsic)
    new_axes = tuple(Axis(f"iso{i + 1}") for i in range(d_intrinsic))
    new_coords = [tuple(float(v) for v in basis.T @ (np.asarray(p.x) - x0)) for p in selected]
    return make_cloud(
        new_axes,
        new_coords,
        [p.energy for p in selected],
        [p.phase for p in selected],
    )


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def diagram_to_jsonable(diagram: PhaseDiagram) -> dict:
    return {
        "schema": DIAGRAM_SCHEMA,
        "axes": [
            {
                "variable": a.variable,
                "representation": a.representation,
                "label": a.label,
                "sign": a.sign,
            }
            for a in diagram.axes
        ],
        "regions": [
            {
                "labels": list(r.labels),
                "kind": r.kind,
                "cells": [
                    {"facet": fid, "vertices": [list(v) for v in verts]}
                    for fid, verts in r.cells
                ],
            }
            for r in diagram.regions
        ],
        "boundaries": [
            {
                "left": list(b.left),
                "right": list(b.right),
                "points": [list(p) for p in b.points],
            }
            for b in diagram.boundaries
        ],
        "provenance": dict(sorted(diagram.provenance.items())),
    }


def _palette_color(key: str) -> str:
    digest = hashlib.md5(key.encode("utf-8")).hexdigest()
    return SVG_PALETTE[int(digest, 16) % len(SVG_PALETTE)]


def _svg_document(diagram, resolution):
    width, height = resolution
    margin = 56
    pts = [p for r in diagram.regions for _, verts in r.cells for p in verts]
    pts += [p for b in diagram.boundaries for p in b.points]
    if pts:
        arr = np.asarray(pts, dtype=float)
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        span = np.where(hi - lo <= 0, 1.0, hi - lo)
    else:
        lo, span = np.zeros(2), np.ones(2)

    def to_px(p):
        x = margin + (p[0] - lo[0]) / span[0] * (width - 2 * margin)
        y = height - margin - (p[1] - lo[1]) / span[1] * (height - 2 * margin)
        return f"{x:.2f},{y:.2f}"

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    for region in diagram.regions:
        color = _palette_color("+".join(region.labels) + region.kind)
        for fid, verts in region.cells:
            uniq = sorted(set(verts))
            if len(uniq) >= 3:
                lines.append(
                    f'<polygon points="{" ".join(to_px(v) for v in verts)}" '
                    f'fill="{color}" fill-opacity="0.55" stroke="{color}" stroke-width="0.4"/>'
                )
            elif len(uniq) == 2:
                a, b = uniq
                lines.append(
                    f'<polyline points="{to_px(a)} {to_px(b)}" stroke="{color}" '
                    f'stroke-width="2" fill="none"/>'
                )
            else:
                lines.append(
                    f'<circle cx="{to_px(uniq[0]).split(",")[0]}" '
                    f'cy="{to_px(uniq[0]).split(",")[1]}" r="2.2" fill="{color}"/>'
                )
    for b in diagram.boundaries:
        if len(b.points) >= 2:
            lines.append(
                f'<polyline points="{" ".join(to_px(p) for p in b.points)}" '
                f'stroke="#222222" stroke-width="1.2" fill="none"/>'
            )
    # frame and axis labels
    lines.append(
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<text x="{width / 2:.1f}" y="{height - margin / 3:.1f}" text-anchor="middle" '
        f'font-size="14">{diagram.axes[0].label}</text>'
    )
    lines.append(
        f'<text x="{margin / 3:.1f}" y="{height / 2:.1f}" text-anchor="middle" '
        f'font-size="14" transform="rotate(-90 {margin / 3:.1f} {height / 2:.1f})">'
        f"{diagram.axes[1].label}</text>"
    )
    for i, region in enumerate(diagram.regions):
        color = _palette_color("+".join(region.labels) + region.kind)
        y = margin + 14 + 16 * i
        lines.append(f'<rect x="{width - margin + 6}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        lines.append(
            f'<text x="{width - margin + 20}" y="{y}" font-size="10">{region.display}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def export_diagram(diagram: PhaseDiagram, format: str, path) -> None:
    """Write a diagram to disk as svg (two axes), csv (boundary vertices) or
    json (full structure). Output is deterministic byte for byte."""
    try:
        if format == "json":
            text = json.dumps(diagram_to_jsonable(diagram), indent=1, sort_keys=False)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text + "\n")
        elif format == "csv":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(
                    ["boundary"]
                    + [a.label for a in diagram.axes]
                    + ["left", "right"]
                )
                for i, b in enumerate(diagram.boundaries):
                    for p in b.points:
                        writer.writerow(
                            [i] + [repr(float(v)) for v in p]
                            + ["+".join(b.left), "+".join(b.right)]
                        )
        elif format == "svg":
            if len(diagram.axes) != 2:
                raise UnsupportedAxisCount(
                    f"svg needs exactly 2 axes, got {len(diagram.axes)}"
                )
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_svg_document(diagram, (640, 480)))
        else:
            raise GibbsdError(f"unknown export format {format!r}")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def load_diagram_json(path) -> dict:
    """Read back an exported diagram document (schema-checked)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != DIAGRAM_SCHEMA:
        raise GibbsdError(f"not a diagram document: {doc.get('schema')!r}")
    return doc
