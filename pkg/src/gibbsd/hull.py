"""Lower convex hull of a labeled point cloud in arbitrary dimension.

The energy axis is the lifting coordinate: a facet of the lower hull is a
set of d = W + 1 points whose supporting hyperplane has every other point
on or above it. Construction is incremental (beneath-beyond over the
extensive projection). Exact ties are resolved by a symbolic lexicographic
perturbation of the energies keyed on point index: point i behaves as if
its energy were U_i + eps^(i+1) for an infinitesimal eps. This makes the
output simplicial and deterministic, and both the main algorithm and the
exhaustive oracle below apply the same rule.

Facets whose extensive projection is degenerate (vertical in the lifted
space) carry no information about the energy envelope and are never
reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cloud import DEFAULT_TOLERANCE, PointCloud, require_full_dimensional
from .errors import (
    DegenerateInput,
    GibbsdError,
    OutsideAffineSpan,
    SingularSimplex,
    TooLargeForOracle,
)

#: Sentinel vertex id for the point at energy +infinity that closes the
#: complex during construction ("ghost" facets over the projected-hull
#: boundary). Never appears in output.
OMEGA = -1

#: Exhaustive oracle refuses clouds larger than this.
ORACLE_MAX_POINTS = 60


@dataclass(frozen=True)
class Hyperplane:
    """Graph of an affine function U = gradient . x + offset."""

    gradient: tuple
    offset: float

    def evaluate(self, x) -> float:
        return float(np.dot(self.gradient, x) + self.offset)


@dataclass(frozen=True)
class Facet:
    """One (d-1)-simplex of the derived surface."""

    vertex_indices: tuple
    hyperplane: Hyperplane
    neighbors: tuple


@dataclass(frozen=True)
class LowerHull:
    """The derived surface: simplicial facets supporting the cloud from below."""

    cloud: PointCloud
    facets: tuple
    hull_vertex_indices: tuple
    tolerance: float

    @property
    def metastable_indices(self) -> tuple:
        """Cloud point indices that are strictly above the derived surface."""
        on_hull = set(self.hull_vertex_indices)
        return tuple(p.index for p in self.cloud.points if p.index not in on_hull)

    def facet_gradients(self) -> np.ndarray:
        return np.array([f.hyperplane.gradient for f in self.facets], dtype=float)


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------


def facet_hyperplane(vertices_x, energies) -> Hyperplane:
    """Hyperplane through d affinely independent lifted points.

    Solves U_i = g . x_i + c exactly (up to round-off) for all vertices.
    Raises SingularSimplex when the extensive-space simplex is degenerate.
    """
    xs = np.asarray(vertices_x, dtype=float)
    us = np.asarray(energies, dtype=float)
    d = xs.shape[0]
    if xs.shape != (d, d - 1) or us.shape != (d,):
        raise SingularSimplex(
            f"need d points with d-1 coordinates each, got {xs.shape}"
        )
    span = xs[1:] - xs[0]
    scale = max(np.abs(span).max(), 1.0) if span.size else 1.0
    if d > 1 and abs(np.linalg.det(span / scale)) <= 1e-12:
        raise SingularSimplex("vertices are affinely dependent in extensive space")
    a = np.hstack([xs, np.ones((d, 1))])
    sol = np.linalg.solve(a, us)
    return Hyperplane(gradient=tuple(float(v) for v in sol[:-1]), offset=float(sol[-1]))


def barycentric_coordinates(simplex_vertices, target_x, tolerance=DEFAULT_TOLERANCE):
    """Affine weights of target_x with respect to a k-simplex in R^W.

    Weights sum to one and reconstruct the target. Raises SingularSimplex
    for affinely dependent vertices and OutsideAffineSpan when the target
    is not in the simplex's affine span (within tolerance, scaled by the
    simplex extent).
    """
    xs = np.asarray(simplex_vertices, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    t = np.atleast_1d(np.asarray(target_x, dtype=float))
    k1 = xs.shape[0]
    span = xs - xs[0]
    scale = max(np.abs(span).max(), np.abs(t - xs[0]).max(), 1e-300)
    if k1 > 1:
        svals = np.linalg.svd(span[1:], compute_uv=False)
        if svals.size and svals[-1] <= tolerance * max(svals[0], scale):
            raise SingularSimplex("simplex vertices are affinely dependent")
    a = np.vstack([xs.T, np.ones(k1)])
    rhs = np.concatenate([t, [1.0]])
    w, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    residual = a @ w - rhs
    if np.abs(residual).max() > tolerance * scale * 10.0:
        raise OutsideAffineSpan(
            f"target is off the affine span by {np.abs(residual).max():.3e}"
        )
    return w


def _tie_break_below(p_pos, member_positions, member_coeffs, tol):
    """Sign of the symbolic residual U_p + eps^(p+1) - sum_j w_j eps^(j+1) - r0
    when the unperturbed part r0 vanishes.

    Returns True when the perturbed point sits strictly below. The entry for
    p itself carries coefficient +1, so the walk always terminates.
    """
    entries = [(p_pos, 1.0)]
    entries.extend((m, -c) for m, c in zip(member_positions, member_coeffs))
    entries.sort()
    for _, coeff in entries:
        if coeff > tol:
            return False
        if coeff < -tol:
            return True
    return False


# ---------------------------------------------------------------------------
# incremental construction
# ---------------------------------------------------------------------------


class _Builder:
    """Beneath-beyond construction in normalized coordinates.

    The working complex is closed: real facets (d cloud points) plus ghost
    facets {ridge, OMEGA} standing for vertical walls over the boundary of
    the projected hull. Every ridge is shared by exactly two members.
    """

    def __init__(self, xs, us, tol):
        self.xs = xs
        self.us = us
        self.n, self.w = xs.shape
        self.d = self.w + 1
        self.tol = tol
        self.facets = {}  # fid -> dict
        self.ridges = {}  # ridge key (sorted tuple, may contain OMEGA) -> set(fid)
        self._next_fid = 0

    # -- complex bookkeeping -------------------------------------------------

    def _ridge_keys(self, verts, is_wall):
        members = list(verts) + ([OMEGA] if is_wall else [])
        for drop in range(len(members)):
            yield tuple(sorted(members[:drop] + members[drop + 1 :]))

    def _add_facet(self, verts, is_wall, **payload):
        fid = self._next_fid
        self._next_fid += 1
        rec = {"verts": tuple(sorted(verts)), "wall": is_wall}
        rec.update(payload)
        self.facets[fid] = rec
        for key in self._ridge_keys(rec["verts"], is_wall):
            self.ridges.setdefault(key, set()).add(fid)
        return fid

    def _remove_facet(self, fid):
        rec = self.facets.pop(fid)
        for key in self._ridge_keys(rec["verts"], rec["wall"]):
            group = self.ridges[key]
            group.discard(fid)
            if not group:
                del self.ridges[key]

    # -- predicates ----------------------------------------------------------

    def _plane_of(self, verts):
        a = np.hstack([self.xs[list(verts)], np.ones((self.d, 1))])
        span = self.xs[list(verts[1:])] - self.xs[verts[0]]
        if abs(np.linalg.det(span)) <= self.tol:
            raise DegenerateInput(
                "unresolved degeneracy: facet with a vertical extensive projection"
            )
        sol = np.linalg.solve(a, self.us[list(verts)])
        return sol[:-1], sol[-1]

    def _below_real(self, p, rec):
        r0 = self.us[p] - (rec["g"] @ self.xs[p] + rec["c"])
        if r0 < -self.tol:
            return True
        if r0 > self.tol:
            return False
        verts = rec["verts"]
        a = np.vstack([self.xs[list(verts)].T, np.ones(self.d)])
        b = np.linalg.solve(a, np.concatenate([self.xs[p], [1.0]]))
        return _tie_break_below(p, verts, b, self.tol)

    def _sees_wall(self, p, rec):
        s = rec["normal"] @ self.xs[p] - rec["s0"]
        if s > self.tol:
            return True
        if s < -self.tol:
            return False
        # On the wall's hyperplane: compare against the lifted ridge span.
        verts = rec["verts"]
        a = np.vstack([self.xs[list(verts)].T, np.ones(len(verts))])
        wgt, *_ = np.linalg.lstsq(a, np.concatenate([self.xs[p], [1.0]]), rcond=None)
        scale = max(1.0, np.abs(wgt).sum())
        r0 = self.us[p] - wgt @ self.us[list(verts)]
        if r0 < -self.tol * scale:
            return True
        if r0 > self.tol * scale:
            return False
        return _tie_break_below(p, verts, wgt, self.tol * max(1.0, np.abs(wgt).max()))

    def _wall_normal(self, ridge_verts, opposite):
        """Unit normal of the ridge's projected span, pointing away from the
        hull interior (represented by the adjacent facet's opposite vertex)."""
        pts = self.xs[list(ridge_verts)]
        base = pts[0]
        v = self.xs[opposite] - base
        if len(ridge_verts) > 1:
            q, _ = np.linalg.qr((pts[1:] - base).T)
            v = v - q @ (q.T @ v)
        norm = np.linalg.norm(v)
        if norm <= self.tol:
            raise DegenerateInput("unresolved degeneracy: collapsed boundary wall")
        n = -v / norm
        return n, float(n @ base)

    # -- construction --------------------------------------------------------

    def _initial_simplex(self):
        chosen = [0]
        basis = np.zeros((self.w, 0))
        for i in range(1, self.n):
            if len(chosen) == self.d:
                break
            v = self.xs[i] - self.xs[chosen[0]]
            perp = v - basis @ (basis.T @ v)
            norm = np.linalg.norm(perp)
            if norm > self.tol:
                chosen.append(i)
                basis = np.hstack([basis, (perp / norm)[:, None]])
        if len(chosen) < self.d:
            raise DegenerateInput("points are affinely dependent in extensive space")
        g, c = self._plane_of(tuple(sorted(chosen)))
        self._add_facet(sorted(chosen), False, g=g, c=c)
        verts = tuple(sorted(chosen))
        for drop in verts:
            ridge = tuple(v for v in verts if v != drop)
            n, s0 = self._wall_normal(ridge, drop)
            self._add_facet(ridge, True, normal=n, s0=s0)
        return set(chosen)

    def _visible_from(self, p):
        vis = []
        real_ids = [fid for fid, rec in self.facets.items() if not rec["wall"]]
        if real_ids:
            g = np.array([self.facets[f]["g"] for f in real_ids])
            c = np.array([self.facets[f]["c"] for f in real_ids])
            r0 = self.us[p] - (g @ self.xs[p] + c)
            for fid, r in zip(real_ids, r0):
                if r < -self.tol:
                    vis.append(fid)
                elif r <= self.tol and self._below_real(p, self.facets[fid]):
                    vis.append(fid)
        for fid, rec in self.facets.items():
            if rec["wall"] and self._sees_wall(p, rec):
                vis.append(fid)
        return vis

    def insert(self, p):
        visible = self._visible_from(p)
        if not visible:
            return  # interior sample, strictly above the current envelope
        visible_set = set(visible)
        horizon = []
        for fid in visible:
            rec = self.facets[fid]
            for key in self._ridge_keys(rec["verts"], rec["wall"]):
                owners = self.ridges[key]
                outside = owners - visible_set
                if outside:
                    horizon.append(key)
        for fid in visible:
            self._remove_facet(fid)
        new_walls = []
        for key in horizon:
            if OMEGA in key:
                ridge = tuple(v for v in key if v != OMEGA) + (p,)
                new_walls.append(self._add_facet(ridge, True, normal=None, s0=None))
            else:
                verts = tuple(sorted(key + (p,)))
                g, c = self._plane_of(verts)
                self._add_facet(verts, False, g=g, c=c)
        # Wall normals need the adjacent real facet, which exists only after
        # the whole cone is in place.
        for fid in new_walls:
            rec = self.facets[fid]
            owners = self.ridges[tuple(sorted(rec["verts"]))] - {fid}
            partner = self.facets[next(iter(owners))]
            opposite = next(v for v in partner["verts"] if v not in rec["verts"])
            rec["normal"], rec["s0"] = self._wall_normal(rec["verts"], opposite)

    def run(self):
        inserted = self._initial_simplex()
        for p in range(self.n):
            if p not in inserted:
                self.insert(p)
        return sorted(self.facets[f]["verts"] for f in self.facets if not self.facets[f]["wall"])


def _normalize(coords, energies):
    lo = coords.min(axis=0)
    rng = coords.max(axis=0) - lo
    rng[rng == 0.0] = 1.0
    ulo = energies.min()
    urng = energies.max() - ulo
    if urng == 0.0:
        urng = 1.0
    return (coords - lo) / rng, (energies - ulo) / urng


def _finalize(cloud, facet_position_tuples, tolerance):
    """Build the public LowerHull from facet vertex positions (cloud order)."""
    order = sorted(range(len(cloud.points)), key=lambda i: cloud.points[i].index)
    coords = cloud.coords()[order]
    energies = cloud.energies()[order]
    index_of = [cloud.points[i].index for i in order]

    facet_vert_positions = sorted(tuple(sorted(f)) for f in facet_position_tuples)
    planes = []
    for verts in facet_vert_positions:
        planes.append(facet_hyperplane(coords[list(verts)], energies[list(verts)]))

    ridge_owner = {}
    for fidx, verts in enumerate(facet_vert_positions):
        for drop in verts:
            key = tuple(v for v in verts if v != drop)
            ridge_owner.setdefault(key, []).append(fidx)
    neighbors = [set() for _ in facet_vert_positions]
    for owners in ridge_owner.values():
        for a in owners:
            for b in owners:
                if a != b:
                    neighbors[a].add(b)

    facets = tuple(
        Facet(
            vertex_indices=tuple(index_of[v] for v in verts),
            hyperplane=plane,
            neighbors=tuple(sorted(neighbors[fidx])),
        )
        for fidx, (verts, plane) in enumerate(zip(facet_vert_positions, planes))
    )
    on_hull = tuple(sorted({i for f in facets for i in f.vertex_indices}))
    return LowerHull(
        cloud=cloud, facets=facets, hull_vertex_indices=on_hull, tolerance=tolerance
    )


def lower_convex_hull(cloud: PointCloud, tolerance: float = DEFAULT_TOLERANCE) -> LowerHull:
    """All facets of the lower envelope of the lifted cloud.

    Output ordering is canonical (facets sorted by vertex indices), so equal
    inputs serialize identically.
    """
    if tolerance <= 0.0:
        raise GibbsdError("tolerance must be positive")
    require_full_dimensional(cloud, tolerance)
    order = sorted(range(len(cloud.points)), key=lambda i: cloud.points[i].index)
    coords = cloud.coords()[order]
    energies = cloud.energies()[order]
    xs, us = _normalize(coords, energies)
    facet_positions = _Builder(xs, us, tolerance).run()
    return _finalize(cloud, facet_positions, tolerance)


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


def _oracle_below(p, subset, r0, xs, us, tol):
    """Independent re-statement of the perturbed below-plane predicate used to
    keep the oracle honest: same rule, separate implementation."""
    if r0 < -tol:
        return True
    if r0 > tol:
        return False
    a = np.vstack([xs[list(subset)].T, np.ones(len(subset))])
    b = np.linalg.solve(a, np.concatenate([xs[p], [1.0]]))
    entries = sorted([(p, 1.0)] + [(v, -bb) for v, bb in zip(subset, b)])
    for _, coeff in entries:
        if coeff > tol:
            return False
        if coeff < -tol:
            return True
    return False


def naive_hull_oracle(cloud: PointCloud, tolerance: float = DEFAULT_TOLERANCE) -> LowerHull:
    """Ground-truth lower hull by exhaustive d-subset enumeration.

    A subset is a facet when its extensive projection is non-degenerate and
    no other point falls below its hyperplane under the same symbolic
    perturbation as the incremental algorithm. Guarded to small clouds.
    """
    if tolerance <= 0.0:
        raise GibbsdError("tolerance must be positive")
    require_full_dimensional(cloud, tolerance)
    n = len(cloud.points)
    if n > ORACLE_MAX_POINTS:
        raise TooLargeForOracle(f"{n} points exceeds the oracle guard of {ORACLE_MAX_POINTS}")
    order = sorted(range(n), key=lambda i: cloud.points[i].index)
    coords = cloud.coords()[order]
    energies = cloud.energies()[order]
    xs, us = _normalize(coords, energies)
    d = cloud.dimension

    facets = []
    for subset in itertools.combinations(range(n), d):
        span = xs[list(subset[1:])] - xs[subset[0]]
        if abs(np.linalg.det(span)) <= tolerance:
            continue
        a = np.hstack([xs[list(subset)], np.ones((d, 1))])
        sol = np.linalg.solve(a, us[list(subset)])
        g, c = sol[:-1], sol[-1]
        member = np.zeros(n, dtype=bool)
        member[list(subset)] = True
        residuals = us - (xs @ g + c)
        supported = True
        for p in np.nonzero(~member)[0]:
            if _oracle_below(int(p), subset, residuals[p], xs, us, tolerance):
                supported = False
                break
        if supported:
            facets.append(subset)
    if not facets:
        raise DegenerateInput("no supported facet found")
    return _finalize(cloud, facets, tolerance)


# ---------------------------------------------------------------------------
# structural validation (used heavily by the tests)
# ---------------------------------------------------------------------------


def validate_lower_hull(hull: LowerHull, samples: int = 1000, seed: int = 0) -> dict:
    """Check the support, tiling and adjacency invariants of a hull.

    Raises GibbsdError on the first violation; returns a small summary dict
    otherwise. Sampling draws random convex combinations of the projected
    cloud, which always land inside the projected hull.
    """
    cloud = hull.cloud
    coords = cloud.coords()
    energies = cloud.energies()
    urange = max(energies.max() - energies.min(), 1.0)
    pos_of = {p.index: i for i, p in enumerate(cloud.points)}

    grads = hull.facet_gradients()
    offs = np.array([f.hyperplane.offset for f in hull.facets])
    worst = float((energies[None, :] - (grads @ coords.T + offs[:, None])).min())
    if worst < -hull.tolerance * urange * 10.0:
        raise GibbsdError(f"support violated by {worst:.3e}")

    for fidx, facet in enumerate(hull.facets):
        for nb in facet.neighbors:
            if fidx not in hull.facets[nb].neighbors:
                raise GibbsdError(f"asymmetric adjacency between {fidx} and {nb}")

    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(len(cloud.points)), size=samples)
    targets = weights @ coords
    simplices = [
        coords[[pos_of[i] for i in f.vertex_indices]] for f in hull.facets
    ]
    mats = np.array([np.vstack([s.T, np.ones(len(s))]) for s in simplices])
    inv = np.linalg.inv(mats)
    boundary_hits = 0
    for t in targets:
        rhs = np.concatenate([t, [1.0]])
        bary = inv @ rhs
        loose = int(np.sum(bary.min(axis=1) >= -1e-7))
        strict = int(np.sum(bary.min(axis=1) > 1e-7))
        if loose < 1:
            raise GibbsdError(f"tiling gap at {t}")
        if strict > 1:
            raise GibbsdError(f"tiling overlap at {t}")
        if loose > strict:
            boundary_hits += 1
    return {
        "facets": len(hull.facets),
        "support_margin": worst,
        "boundary_hits": boundary_hits,
    }
