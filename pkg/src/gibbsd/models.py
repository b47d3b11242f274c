"""Analytic internal-energy models: quadratic wells with optional quartic
corrections, their derivatives, stability tests, and grid sampling.

Functional forms are chosen so that common tangents and spinodals have
closed-form oracles. Energies are in caller units throughout; sign
conventions for presenting intensive variables live in ConjugatePair and
are applied only at diagram time, never internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .cloud import Axis, PointCloud, make_cloud
from .errors import EmptyGrid, GibbsdError, UnknownDemo, UnknownPhase

DEMO_CONFIG_RESOURCE = "demo_models.json"
DEMO_CONFIG_SCHEMA = "gibbsd-demo-models/1"


@dataclass(frozen=True)
class ConjugatePair:
    """One work pair: extensive variable plus its conventional intensive
    partner. ``sign`` maps the raw conjugate Y = dU/dX to the conventional
    intensive value (e.g. -1 for volume, where the -PdV convention gives
    P = -dU/dV)."""

    name: str
    intensive_name: str
    sign: int = 1
    unit: str = ""
    intensive_unit: str = ""

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise GibbsdError(f"sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class QuarticCorrection:
    """Diagonal quartic term sum_i a_i (x_i - c_i)^4 added to a well."""

    coefficients: tuple
    center: tuple

    def energy(self, x):
        dx = np.asarray(x, dtype=float) - self.center
        return float(np.dot(self.coefficients, dx**4))

    def gradient(self, x):
        dx = np.asarray(x, dtype=float) - self.center
        return 4.0 * np.asarray(self.coefficients) * dx**3

    def hessian_diagonal(self, x):
        dx = np.asarray(x, dtype=float) - self.center
        return 12.0 * np.asarray(self.coefficients) * dx**2


@dataclass(frozen=True)
class Well:
    """One phase's primitive surface:
    U(x) = U0 + (x - x0)' H (x - x0) / 2 + correction(x)."""

    label: str
    base_energy: float
    minimum: tuple
    curvature: tuple
    correction: QuarticCorrection | None = None

    def __post_init__(self):
        h = np.asarray(self.curvature, dtype=float)
        if h.shape != (len(self.minimum), len(self.minimum)):
            raise GibbsdError(f"curvature shape {h.shape} does not match minimum")
        if not np.array_equal(h, h.T):
            raise GibbsdError(f"curvature of {self.label!r} must be exactly symmetric")
        if self.correction is None and np.linalg.eigvalsh(h).min() <= 0.0:
            raise GibbsdError(
                f"well {self.label!r} without correction must be positive definite"
            )


@dataclass(frozen=True)
class AnalyticModel:
    """A multi-well internal-energy model over W conjugate pairs."""

    variables: tuple
    phases: tuple

    def __post_init__(self):
        w = len(self.variables)
        for well in self.phases:
            if len(well.minimum) != w:
                raise GibbsdError(f"well {well.label!r} has wrong dimension")
        labels = [well.label for well in self.phases]
        if len(set(labels)) != len(labels):
            raise GibbsdError("duplicate phase labels")

    @property
    def w(self) -> int:
        return len(self.variables)

    @property
    def phase_labels(self) -> tuple:
        return tuple(well.label for well in self.phases)

    def well(self, phase: str) -> Well:
        for well in self.phases:
            if well.label == phase:
                return well
        raise UnknownPhase(f"model has no phase {phase!r}")


@dataclass(frozen=True)
class SpinodalLocus:
    """Extensive points where the smallest Hessian eigenvalue crosses zero."""

    phase: str
    points: tuple


def evaluate_energy(model: AnalyticModel, phase: str, x) -> float:
    well = model.well(phase)
    dx = np.asarray(x, dtype=float) - well.minimum
    if dx.shape != (model.w,):
        raise GibbsdError(f"point has dimension {dx.shape}, model needs {model.w}")
    u = well.base_energy + 0.5 * dx @ np.asarray(well.curvature) @ dx
    if well.correction is not None:
        u += well.correction.energy(x)
    return float(u)


def gradient(model: AnalyticModel, phase: str, x) -> np.ndarray:
    """Raw conjugate vector Y_i = dU/dX_i (no sign mapping)."""
    well = model.well(phase)
    dx = np.asarray(x, dtype=float) - well.minimum
    g = np.asarray(well.curvature) @ dx
    if well.correction is not None:
        g = g + well.correction.gradient(x)
    return g


def hessian(model: AnalyticModel, phase: str, x) -> np.ndarray:
    well = model.well(phase)
    h = np.asarray(well.curvature, dtype=float).copy()
    if well.correction is not None:
        h[np.diag_indices_from(h)] += well.correction.hessian_diagonal(x)
    return h


def is_locally_stable(model: AnalyticModel, phase: str, x, tolerance: float = 1e-9) -> bool:
    """True when the Hessian is positive definite (all eigenvalues above
    tolerance), the convexity requirement for a homogeneous phase."""
    return bool(np.linalg.eigvalsh(hessian(model, phase, x)).min() > tolerance)


def _lambda_min(model, phase, x):
    return float(np.linalg.eigvalsh(hessian(model, phase, x)).min())


def grid_nodes(grid) -> np.ndarray:
    """Row-major nodes of a per-axis (min, max, count) grid specification."""
    axes = []
    for lo, hi, count in grid:
        if count < 2 or not np.isfinite([lo, hi]).all() or hi <= lo:
            raise EmptyGrid(f"bad grid axis ({lo}, {hi}, {count})")
        axes.append(np.linspace(float(lo), float(hi), int(count)))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def spinodal_locus(model, phase, grid, tolerance: float = 1e-9) -> SpinodalLocus:
    """Grid scan for sign changes of the smallest Hessian eigenvalue,
    refined along grid edges by bisection to |lambda_min| <= tolerance."""
    nodes = grid_nodes(grid)
    if nodes.shape[1] != model.w:
        raise GibbsdError("grid dimension does not match model")
    lmin = np.array([_lambda_min(model, phase, x) for x in nodes])
    shape = tuple(int(c) for _, _, c in grid)
    lgrid = lmin.reshape(shape)
    xgrid = nodes.reshape(shape + (model.w,))
    crossings = []
    for axis in range(len(shape)):
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        a, b = lgrid[tuple(lo)], lgrid[tuple(hi)]
        xa, xb = xgrid[tuple(lo)], xgrid[tuple(hi)]
        mask = np.sign(a) * np.sign(b) < 0
        for ia, ib, fa in zip(xa[mask], xb[mask], a[mask]):
            left, right = ia.copy(), ib.copy()
            fleft = fa
            for _ in range(200):
                mid = 0.5 * (left + right)
                fmid = _lambda_min(model, phase, mid)
                if abs(fmid) <= tolerance:
                    break
                if np.sign(fmid) == np.sign(fleft):
                    left, fleft = mid, fmid
                else:
                    right = mid
            crossings.append(tuple(float(v) for v in mid))
    return SpinodalLocus(phase=phase, points=tuple(crossings))


def sample_surface(model: AnalyticModel, grid) -> PointCloud:
    """One labeled point per (phase, grid node), phases in model order and
    nodes row-major. Energies match evaluate_energy bit for bit."""
    nodes = grid_nodes(grid)
    if nodes.shape[1] != model.w:
        raise GibbsdError("grid dimension does not match model")
    coords, energies, labels = [], [], []
    for well in model.phases:
        for x in nodes:
            coords.append(tuple(float(v) for v in x))
            energies.append(evaluate_energy(model, well.label, x))
            labels.append(well.label)
    axes = tuple(Axis(p.name, unit=p.unit) for p in model.variables)
    return make_cloud(axes, coords, energies, labels)


# ---------------------------------------------------------------------------
# built-in demo models (parameters shipped as versioned package data)
# ---------------------------------------------------------------------------


def _load_demo_config() -> dict:
    text = resources.files("gibbsd.data").joinpath(DEMO_CONFIG_RESOURCE).read_text("utf-8")
    cfg = json.loads(text)
    if cfg.get("schema") != DEMO_CONFIG_SCHEMA:
        raise GibbsdError(f"unexpected demo config schema {cfg.get('schema')!r}")
    return cfg


def _model_from_config(entry: dict) -> AnalyticModel:
    pairs = tuple(
        ConjugatePair(
            name=v["name"],
            intensive_name=v["intensive_name"],
            sign=int(v["sign"]),
            unit=v.get("unit", ""),
            intensive_unit=v.get("intensive_unit", ""),
        )
        for v in entry["variables"]
    )
    wells = []
    for ph in entry["phases"]:
        corr = ph.get("correction")
        correction = None
        if corr is not None:
            if corr["kind"] != "quartic":
                raise GibbsdError(f"unknown correction kind {corr['kind']!r}")
            correction = QuarticCorrection(
                coefficients=tuple(float(a) for a in corr["coefficients"]),
                center=tuple(float(c) for c in corr["center"]),
            )
        wells.append(
            Well(
                label=ph["label"],
                base_energy=float(ph["base_energy"]),
                minimum=tuple(float(v) for v in ph["minimum"]),
                curvature=tuple(tuple(float(v) for v in row) for row in ph["curvature"]),
                correction=correction,
            )
        )
    return AnalyticModel(variables=pairs, phases=tuple(wells))


def builtin_demo_model(name: str) -> AnalyticModel:
    """A fully parameterized demo model from the shipped config."""
    cfg = _load_demo_config()
    if name not in cfg["models"]:
        raise UnknownDemo(
            f"unknown demo {name!r}; available: {sorted(cfg['models'])}"
        )
    return _model_from_config(cfg["models"][name])


def demo_default_grid(name: str) -> tuple:
    """The (min, max, count) sampling grid shipped with a demo model."""
    cfg = _load_demo_config()
    if name not in cfg["models"]:
        raise UnknownDemo(f"unknown demo {name!r}")
    return tuple(tuple(axis) for axis in cfg["models"][name]["default_grid"])


def demo_names() -> tuple:
    return tuple(sorted(_load_demo_config()["models"]))
