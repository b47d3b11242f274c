"""f-vectors of simplicial polytopes and the combinatorial audits:
Dehn-Somerville identities, cyclic polytopes via Gale's evenness condition,
the Upper Bound Theorem, and ternary phase-diagram complexity bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DegenerateInput, GibbsdError


@dataclass(frozen=True)
class FVector:
    """Face counts (f_0, ..., f_{d-1}) of a simplicial polytope or complex.

    A trailing count of 1 marks a "solid" vector that includes the top face
    itself (as in the face table of a single simplex); no polytope boundary
    has a single facet, so the form is unambiguous.
    """

    d: int
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.counts) != self.d:
            raise GibbsdError(f"need {self.d} counts, got {len(self.counts)}")
        if any(c < 0 for c in self.counts):
            raise GibbsdError("face counts must be non-negative")

    def boundary_form(self):
        """(d, counts) with a trailing top-face 1 stripped off."""
        if self.d >= 1 and self.counts[-1] == 1:
            return self.d - 1, self.counts[:-1]
        return self.d, self.counts


def simplex_fvector(k: int) -> FVector:
    """Face counts of a k-simplex, f_j = C(k+1, j+1), including the top face.

    Reproduces the face table row by row: k=2 gives (3, 3, 1).
    """
    if not 0 <= k <= 20:
        raise GibbsdError(f"simplex dimension {k} out of range [0, 20]")
    return FVector(d=k + 1, counts=tuple(comb(k + 1, j + 1) for j in range(k + 1)))


def fvector_of_hull(hull_or_facets) -> FVector:
    """Count the distinct k-faces of a simplicial complex given by its
    facets (every face is a vertex subset of some facet).

    Accepts a LowerHull or any iterable of facet vertex-index tuples.
    """
    if hasattr(hull_or_facets, "facets"):
        facet_sets = [tuple(f.vertex_indices) for f in hull_or_facets.facets]
    else:
        facet_sets = [tuple(f) for f in hull_or_facets]
    if not facet_sets:
        raise GibbsdError("no facets")
    d = len(facet_sets[0])
    if any(len(f) != d for f in facet_sets):
        raise GibbsdError("facets have mixed vertex counts")
    faces = set()
    for f in facet_sets:
        for size in range(1, d + 1):
            faces.update(itertools.combinations(sorted(f), size))
    counts = [0] * d
    for face in faces:
        counts[len(face) - 1] += 1
    return FVector(d=d, counts=tuple(counts))


def dehn_somerville_check(f: FVector) -> dict:
    """Evaluate, for each k in {-1, 0, ..., d-1}, the identity

        sum_{j=k}^{d-1} (-1)^j C(j+1, k+1) f_j = (-1)^(d-1) f_k

    with f_{-1} = 1. The k = -1 row is the Euler relation (in three
    dimensions, f_0 - f_1 + f_2 = 2). Returns {k: bool}. Solid vectors
    (trailing 1) are checked on their boundary counts.
    """
    d, counts = f.boundary_form()

    def face_count(k):
        return 1 if k == -1 else counts[k]

    results = {}
    for k in range(-1, d):
        total = 0
        for j in range(k, d):
            total += (-1) ** j * comb(j + 1, k + 1) * face_count(j)
        results[k] = total == (-1) ** (d - 1) * face_count(k)
    return results


def _gale_even(subset, n):
    """Gale's evenness condition: every maximal run of consecutive members
    not touching 0 or n-1 has even length."""
    runs = []
    start = prev = subset[0]
    for v in subset[1:]:
        if v == prev + 1:
            prev = v
        else:
            runs.append((start, prev))
            start = prev = v
    runs.append((start, prev))
    for a, b in runs:
        if a == 0 or b == n - 1:
            continue
        if (b - a + 1) % 2 == 1:
            return False
    return True


def cyclic_polytope_facets(n: int, d: int) -> list:
    """Facets of the cyclic polytope c(n, d) as sorted vertex tuples,
    enumerated by Gale's evenness condition on index subsets."""
    if d < 2 or d > 8:
        raise GibbsdError(f"cyclic polytope dimension {d} out of range [2, 8]")
    if n < d + 1:
        raise GibbsdError(f"c(n, d) needs n >= d + 1, got n={n}")
    if d == 2:
        return [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    return [s for s in itertools.combinations(range(n), d) if _gale_even(s, n)]


def cyclic_fvector(n: int, d: int) -> FVector:
    """f-vector of the cyclic polytope c(n, d), counting sub-faces of the
    Gale-evenness facet list."""
    return fvector_of_hull(cyclic_polytope_facets(n, d))


def ubt_check(f: FVector, n: int | None = None) -> dict:
    """Upper Bound Theorem comparison: f_k must not exceed the cyclic
    polytope value f_k(c(n, d)) at any k. Returns {k: bool}."""
    d, counts = f.boundary_form()
    if n is None:
        n = counts[0]
    if counts[0] != n:
        raise GibbsdError(f"f_0 = {counts[0]} does not match n = {n}")
    bound = cyclic_fvector(n, d)
    return {k: counts[k] <= bound.counts[k] for k in range(d)}


def moment_curve_points(n: int, d: int) -> np.ndarray:
    """n points on the moment curve (t, t^2, ..., t^d), t equally spaced in
    [-2, 2]; their hull is combinatorially c(n, d)."""
    t = np.linspace(-2.0, 2.0, n)
    return np.stack([t ** (j + 1) for j in range(d)], axis=-1)


def full_hull_facets(points, tolerance: float = 1e-9) -> list:
    """Facets of the full convex hull of a small point set in general
    position, by exhaustive subset enumeration. The independent oracle for
    the combinatorial checks; cost grows as C(n, d)."""
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    if n < d + 1:
        raise DegenerateInput(f"need at least {d + 1} points in R^{d}")
    scale = max(np.abs(pts).max(), 1.0)
    facets = []
    for subset in itertools.combinations(range(n), d):
        base = pts[subset[0]]
        span = pts[list(subset[1:])] - base
        u, s, vh = np.linalg.svd(span)
        if s[-1] <= tolerance * scale:
            raise DegenerateInput(f"affinely dependent subset {subset}")
        normal = vh[-1]
        rest = [i for i in range(n) if i not in subset]
        res = (pts[rest] - base) @ normal
        if np.abs(res).min() <= tolerance * scale:
            raise DegenerateInput(f"point on the hyperplane of subset {subset}")
        if res.max() < 0 or res.min() > 0:
            facets.append(subset)
    return facets


TERNARY_MINIMAL = "minimal"
TERNARY_MAXIMAL = "maximal"
TERNARY_INTERIOR = "interior"
TERNARY_VIOLATION_LOWER = "violation-lower"
TERNARY_VIOLATION_UPPER = "violation-upper"


def ternary_bounds(f0: int, f2: int) -> str:
    """Position of a ternary diagram's three-phase face count within the
    complexity bounds [f0 - 2, 2 f0 - 4]."""
    if f0 < 3:
        raise GibbsdError(f"a ternary diagram has at least 3 phases, got {f0}")
    lower, upper = f0 - 2, 2 * f0 - 4
    if f2 < lower:
        return TERNARY_VIOLATION_LOWER
    if f2 > upper:
        return TERNARY_VIOLATION_UPPER
    if f2 == lower:
        return TERNARY_MINIMAL
    if f2 == upper:
        return TERNARY_MAXIMAL
    return TERNARY_INTERIOR


def fan_split_fvectors(steps: int, mode: str = "edge") -> list:
    """Synthetic ternary complexity generator by repeated triangle splitting.

    Starting from the empty elemental triangle (f0, f2) = (3, 1):
    splitting on a boundary edge adds one vertex and one face, keeping the
    diagram minimal (f2 = f0 - 2); an interior split adds one vertex and two
    faces. The minimal-mode invariant is asserted after every step.
    """
    if mode not in ("edge", "interior"):
        raise GibbsdError(f"unknown split mode {mode!r}")
    f0, f2 = 3, 1
    out = [(f0, f2)]
    for _ in range(steps):
        f0 += 1
        f2 += 1 if mode == "edge" else 2
        if mode == "edge":
            assert f2 == f0 - 2, "edge splits must stay on the lower bound"
        out.append((f0, f2))
    return out
