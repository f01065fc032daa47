"""Legendrian maps into the model space R x C^{2n}.

The ambient contact form is the curve-adapted normal form

    alpha = dz - y_1 theta(x_1) - sum_{i>=2} y_i dx_i

with theta = g(u) du taken from the surface model.  A map is stored as a
base component x_1 (a flow reparametrization or the identity) plus named
fiber components x_2..x_n, y_1..y_n, z, each an evaluator with an exact
derivative.  Pullback residuals, periods, lengths and double-point scans
are all sampled certificates; Legendrianization replaces z by the primitive
of the pullback defect and is exact (termwise) for polynomial data on an
identity base.

Lengths and distances use the product of the base chart's Euclidean metric
with Euclidean C^{2n}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDilation, PeriodObstruction, StructuralError)
from .quadrature import Arc, Circle, Polyline, path_integral, path_length
from .series import Series
from .surfaces import BaseMap, SurfaceModel, homology_periods, identity_map

TOL_LEG = 1e-10
TOL_PERIOD = 1e-10
TOL_IMMERSION = 1e-6
TOL_EMBED = 1e-6


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------

class SeriesComponent:
    """Component given by a truncated Laurent series (exact derivative)."""

    def __init__(self, series: Series):
        self.series = series

    def value(self, u):
        return self.series(u)

    def deriv(self, u):
        return self.series.derivative()(u)

    def scaled(self, c):
        return SeriesComponent(self.series * c)


class CallableComponent:
    """Component given by paired value/derivative evaluators."""

    def __init__(self, value_fn, deriv_fn):
        self._value, self._deriv = value_fn, deriv_fn

    def value(self, u):
        return self._value(np.asarray(u, dtype=complex))

    def deriv(self, u):
        return self._deriv(np.asarray(u, dtype=complex))

    def scaled(self, c):
        return CallableComponent(lambda u: c * self._value(u),
                                 lambda u: c * self._deriv(u))


class IntegralComponent:
    """z-type component defined by a path integral from the basepoint.

    ``value`` integrates the stored du-coefficient along a straight chain
    from the basepoint (valid when periods vanish); ``deriv`` is the
    integrand itself plus an optional explicit part."""

    def __init__(self, integrand, basepoint: complex, offset=None, model=None):
        self.integrand = integrand
        self.basepoint = complex(basepoint)
        self.offset = offset          # component added verbatim (e.g. old z)
        self.model = model

    def _path_to(self, u: complex):
        p, u = self.basepoint, complex(u)
        if self.model is not None and self.model.kind in ("annulus", "punctured_plane"):
            # radial-then-angular chain stays inside an annular domain
            mid = u * abs(p) / abs(u) if abs(u) > 0 else p
            a0, a1 = np.angle(p), np.angle(mid)
            if abs(a1 - a0) > np.pi:
                a1 -= 2 * np.pi * np.sign(a1 - a0)
            legs = []
            if abs(a1 - a0) > 1e-15:
                legs.append(Arc(0j, abs(p), a0, a1))
            if abs(u - mid) > 1e-15:
                legs.append(Polyline((mid, u)))
            return legs
        if abs(u - p) < 1e-15:
            return []
        return [Polyline((p, u))]

    def value(self, u):
        us = np.atleast_1d(np.asarray(u, dtype=complex))
        out = np.empty(us.shape, dtype=complex)
        for i, ui in enumerate(us):
            acc = 0j
            for leg in self._path_to(ui):
                acc += path_integral(self.integrand, leg, tol=1e-13)
            out[i] = acc
        if self.offset is not None:
            out = out + np.atleast_1d(self.offset.value(us))
        return out if np.ndim(u) else complex(out[0])

    def deriv(self, u):
        base = self.integrand(np.asarray(u, dtype=complex))
        if self.offset is not None:
            base = base + self.offset.deriv(u)
        return base

    def scaled(self, c):
        off = self.offset.scaled(c) if self.offset is not None else None
        return IntegralComponent(lambda u: c * self.integrand(u),
                                 self.basepoint, off, self.model)


def as_component(obj) -> object:
    if isinstance(obj, Series):
        return SeriesComponent(obj)
    if hasattr(obj, "value") and hasattr(obj, "deriv"):
        return obj
    raise StructuralError(f"cannot interpret {obj!r} as a map component")


# ---------------------------------------------------------------------------
# the map
# ---------------------------------------------------------------------------

@dataclass
class InjectivityReport:
    min_distance: float
    witness: tuple
    n_grid: int
    diag_margin: float
    tol: float
    embedding_plausible: bool

    def as_dict(self):
        a, b = self.witness
        return {"min_distance": self.min_distance,
                "witness": [[a.real, a.imag], [b.real, b.imag]],
                "n_grid": self.n_grid, "diag_margin": self.diag_margin,
                "tol": self.tol, "embedding_plausible": self.embedding_plausible}


class LegendrianMap:
    """Map M -> R x C^{2n} with the model contact form of the surface."""

    FIBER_ORDER = staticmethod(lambda n: tuple(
        [f"x{j}" for j in range(2, n + 1)] +
        [f"y{j}" for j in range(1, n + 1)] + ["z"]))

    def __init__(self, model: SurfaceModel, n: int, fibers: dict,
                 base: BaseMap | None = None):
        self.model = model
        self.n = int(n)
        self.base = base if base is not None else identity_map(model)
        want = set(self.FIBER_ORDER(self.n))
        self.fibers = {k: as_component(v) for k, v in fibers.items()}
        for k in want - set(self.fibers):
            self.fibers[k] = SeriesComponent(Series.zero(model.var))
        if set(self.fibers) != want:
            raise StructuralError(
                f"fiber components {sorted(self.fibers)} do not match n = {self.n}")
        self.certificates: dict = {}

    @staticmethod
    def zero_section(model: SurfaceModel, n: int = 1) -> "LegendrianMap":
        return LegendrianMap(model, n, {})

    def component_names(self):
        return ("x1",) + self.FIBER_ORDER(self.n)

    def component(self, name):
        return self.base if name == "x1" else self.fibers[name]

    def values(self, u) -> np.ndarray:
        """Stacked component values, shape (2n+1, len(u))."""
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        rows = [self.base.value(u)]
        rows += [np.atleast_1d(self.fibers[k].value(u)) + np.zeros_like(u)
                 for k in self.FIBER_ORDER(self.n)]
        return np.vstack(rows)

    def derivs(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        rows = [self.base.deriv(u) + np.zeros_like(u)]
        rows += [np.atleast_1d(self.fibers[k].deriv(u)) + np.zeros_like(u)
                 for k in self.FIBER_ORDER(self.n)]
        return np.vstack(rows)

    # -- certificates ---------------------------------------------------------

    def immersion_certificate(self, tol: float = TOL_IMMERSION):
        pts = self.model.sample_points()
        speed = np.sqrt(np.sum(np.abs(self.derivs(pts)) ** 2, axis=0))
        val = float(speed.min())
        self.certificates["immersion_min_derivative"] = val
        return val > tol

    def __repr__(self):
        return f"LegendrianMap(n={self.n}, model={self.model.kind})"


# ---------------------------------------------------------------------------
# pullback of the model form
# ---------------------------------------------------------------------------

def _check_model_alpha(f: LegendrianMap, alpha):
    """Accept only the curve-adapted normal form over f's chart data."""
    if alpha is None:
        return
    from .forms import Form, normal_contact_form
    if isinstance(alpha, Form):
        want = normal_contact_form(alpha.chart)
        if (alpha - want).sup_coeff() > 1e-14:
            raise StructuralError(
                "pullback_alpha expects the model normal form over the chart")


def pullback_alpha(f: LegendrianMap, alpha=None):
    """Evaluator for f^* alpha (du-coefficient) plus its sampled sup.

    f^* alpha = [z' - y_1 g(x_1) x_1' - sum_{i>=2} y_i x_i'] du."""
    _check_model_alpha(f, alpha)
    g = f.model.theta_g

    def w(u):
        u = np.asarray(u, dtype=complex)
        x1, dx1 = f.base.value(u), f.base.deriv(u)
        acc = np.asarray(f.fibers["z"].deriv(u)) + np.zeros_like(u)
        acc = acc - np.asarray(f.fibers["y1"].value(u)) * g(x1) * dx1
        for i in range(2, f.n + 1):
            acc = acc - (np.asarray(f.fibers[f"y{i}"].value(u))
                         * np.asarray(f.fibers[f"x{i}"].deriv(u)))
        return acc

    pts = f.model.sample_points()
    residual = float(np.max(np.abs(w(pts))))
    f.certificates["pullback_residual"] = residual
    return w, residual


def legendrianize(f: LegendrianMap, alpha=None, basepoint=None,
                  tol_period: float = TOL_PERIOD,
                  tol_leg: float = TOL_LEG) -> LegendrianMap:
    """Replace z by z - int_p f^* alpha, producing a Legendrian map.

    Requires vanishing periods of f^* alpha over the homology generators;
    a nonzero period raises PeriodObstruction carrying the period vector."""
    _check_model_alpha(f, alpha)
    w, _ = pullback_alpha(f)
    periods = homology_periods(w, f.model)
    if periods.size and np.max(np.abs(periods)) > tol_period:
        raise PeriodObstruction(
            f"f^* alpha has periods {periods}", periods=periods)
    p = complex(basepoint) if basepoint is not None else complex(f.model.basepoint)

    series_ok = (f.base.is_identity()
                 and all(isinstance(c, SeriesComponent) for c in f.fibers.values())
                 and f.model.theta_g.k_min >= -1)
    fibers = dict(f.fibers)
    if series_ok:
        g = f.model.theta_g
        integrand = fibers["z"].series.derivative() - fibers["y1"].series * g
        for i in range(2, f.n + 1):
            integrand = integrand - fibers[f"y{i}"].series * fibers[f"x{i}"].series.derivative()
        prim = integrand.antiderivative(drop_residue_tol=max(tol_period * 10, 1e-9))
        z_new = fibers["z"].series - (prim - Series.constant(prim(p)))
        fibers["z"] = SeriesComponent(z_new)
    else:
        fibers["z"] = IntegralComponent(
            lambda u: -w(u), p, offset=f.fibers["z"], model=f.model)
    out = LegendrianMap(f.model, f.n, fibers, base=f.base)
    _, residual = pullback_alpha(out)
    out.certificates["period_vector"] = periods
    out.certificates["legendrian_certified"] = residual < tol_leg
    sup_change = float(np.max(np.abs(
        out.values(f.model.sample_points())[-1] - f.values(f.model.sample_points())[-1])))
    out.certificates["z_change_sup"] = sup_change
    return out


# ---------------------------------------------------------------------------
# dilation
# ---------------------------------------------------------------------------

def dilate(obj, t):
    """Anisotropic dilation: z, y1 by t^2; x_j, y_j (j >= 2) by t.

    Acts on LegendrianMap components or on a 1-form (via pullback)."""
    t = complex(t)
    if t == 0:
        raise DegenerateDilation("dilation weight t must be nonzero")
    if isinstance(obj, LegendrianMap):
        fibers = {}
        for name, comp in obj.fibers.items():
            wgt = t * t if name in ("z", "y1") else t
            fibers[name] = comp.scaled(wgt)
        out = LegendrianMap(obj.model, obj.n, fibers, base=obj.base)
        return out
    from .coords import CoordinateChange
    from .forms import Form, pullback_form
    if isinstance(obj, Form):
        return pullback_form(obj, CoordinateChange.dilation(obj.chart, t))
    raise StructuralError("dilate expects a LegendrianMap or a 1-form")


# ---------------------------------------------------------------------------
# length and injectivity diagnostics
# ---------------------------------------------------------------------------

def _parametrized(path):
    if isinstance(path, (Circle, Arc)):
        return [(path.point, path.velocity)]
    if isinstance(path, Polyline):
        return [(lambda t, a=a, b=b: a + (b - a) * np.asarray(t),
                 lambda t, a=a, b=b: (b - a) * np.ones_like(np.asarray(t)))
                for a, b in path.segments]
    raise StructuralError(f"unknown path kind {type(path).__name__}")


def image_length(f: LegendrianMap, path) -> float:
    """Ambient Euclidean arclength of f composed with the path.

    |d/dt f(gamma(t))| = |gamma'(t)| sqrt(sum_c |c'(gamma(t))|^2)."""
    total = 0.0
    for point, velocity in _parametrized(path):
        total += path_length(point,
                             lambda t, point=point, velocity=velocity:
                             np.abs(velocity(t)) *
                             np.sqrt(np.sum(np.abs(f.derivs(point(t))) ** 2, axis=0)))
    return total


def radial_fan(model: SurfaceModel, u0: complex | None = None, n_paths: int = 32):
    """Paths from u0 to the working boundary (both boundaries on an annulus)."""
    u0 = complex(model.basepoint) if u0 is None else complex(u0)
    r_in, r_out = model.radial_bounds()
    paths = []
    two_sided = r_in > 0
    k_out = n_paths // 2 if two_sided else n_paths
    for k in range(k_out):
        ang = 2 * np.pi * k / k_out
        paths.append(Polyline((u0, r_out * np.exp(1j * ang))))
    if two_sided:
        for k in range(n_paths - k_out):
            ang = 2 * np.pi * k / (n_paths - k_out)
            paths.append(Polyline((u0, r_in * np.exp(1j * ang))))
    return paths


def length_profile(f: LegendrianMap, paths=None, u0=None, n_paths: int = 32):
    """Per-path image lengths plus the boundary-distance estimate.

    With no paths given, a fan of radial paths from u0 is used and the
    infimum over the fan is the completeness diagnostic."""
    if paths is None:
        paths = radial_fan(f.model, u0, n_paths)
    lengths = [image_length(f, p) for p in paths]
    return {"lengths": lengths, "infimum": min(lengths) if lengths else float("inf"),
            "n_paths": len(paths)}


def _scan_grid(model: SurfaceModel, n_grid: int) -> np.ndarray:
    n_ang = 16
    n_rad = max(2, n_grid // n_ang)
    r_in, r_out = model.radial_bounds()
    lo = r_in if r_in > 0 else r_out / n_rad
    radii = np.linspace(lo, r_out, n_rad)
    pts = [r * np.exp(2j * np.pi * (np.arange(n_ang) + (j % 2) / 2) / n_ang)
           for j, r in enumerate(radii)]
    return np.concatenate(pts)[:n_grid]


def double_point_scan(f: LegendrianMap, diag_margin: float = 0.1,
                      n_grid: int = 128, tol: float = TOL_EMBED) -> InjectivityReport:
    """Sampled search for near double points of the image.

    Scans all ordered grid pairs off a diagonal margin and reports the
    minimum ambient distance with the minimizing pair.  This is a numerical
    diagnostic for embeddedness, not a proof."""
    if not f.immersion_certificate():
        raise StructuralError("double_point_scan requires an immersion certificate")
    pts = _scan_grid(f.model, n_grid)
    vals = f.values(pts)                         # (C, N)
    du = np.abs(pts[:, None] - pts[None, :])
    dist = np.sqrt(np.sum(np.abs(vals[:, :, None] - vals[:, None, :]) ** 2, axis=0))
    mask = du >= diag_margin
    if not np.any(mask):
        raise StructuralError("diag_margin excludes the entire grid")
    dist = np.where(mask, dist, np.inf)
    idx = np.unravel_index(int(np.argmin(dist)), dist.shape)
    dmin = float(dist[idx])
    return InjectivityReport(
        min_distance=dmin, witness=(complex(pts[idx[0]]), complex(pts[idx[1]])),
        n_grid=len(pts), diag_margin=diag_margin, tol=tol,
        embedding_plausible=dmin > tol)
