"""Desk-scale models of the base Riemann surface.

A ``SurfaceModel`` fixes a planar domain for the base variable u, a nowhere
vanishing 1-form theta = g(u) du, a nowhere vanishing vector field V with an
explicit flow (translation V = d/du or Euler V = u d/du), homology generator
loops, and a basepoint.  Checks are sampled on a slightly shrunk closed
subdomain; the shrink factor is an artifact parameter with no geometric
meaning beyond keeping sample sets away from the boundary.

Polydisc models carry m base variables u_1..u_m with theta_j = du_j; series
coefficients on them are restricted to the distinguished first variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FlowEscape, StructuralError
from .quadrature import Circle, path_integral
from .series import Series, exp_series

THETA_MARGIN = 1e-6
DEFAULT_SHRINK = 0.95


@dataclass(frozen=True)
class SurfaceModel:
    kind: str                      # disc | annulus | plane | punctured_plane | polydisc
    params: tuple = ()
    theta_g: Series = None
    v_kind: str = "translation"    # translation | euler
    loops: tuple = ()
    basepoint: complex = 0j
    shrink: float = DEFAULT_SHRINK
    base_vars: tuple = ("u",)

    def __post_init__(self):
        if self.theta_g is None:
            object.__setattr__(self, "theta_g", Series.constant(1.0, self.base_vars[0]))
        object.__setattr__(self, "loops", tuple(float(r) for r in self.loops))
        self._validate()

    # -- constructors --------------------------------------------------------

    @staticmethod
    def disc(radius=1.0, **kw):
        kw.setdefault("basepoint", 0j)
        return SurfaceModel("disc", (float(radius),), **kw)

    @staticmethod
    def annulus(r_in=0.5, r_out=1.0, **kw):
        kw.setdefault("loops", (np.sqrt(r_in * r_out),))
        kw.setdefault("basepoint", complex(0.5 * (r_in + r_out)))
        return SurfaceModel("annulus", (float(r_in), float(r_out)), **kw)

    @staticmethod
    def plane(working_radius=2.0, **kw):
        return SurfaceModel("plane", (float(working_radius),), **kw)

    @staticmethod
    def punctured_plane(r_in=0.25, r_out=4.0, **kw):
        kw.setdefault("loops", (1.0,))
        kw.setdefault("basepoint", 1.0 + 0j)
        return SurfaceModel("punctured_plane", (float(r_in), float(r_out)), **kw)

    @staticmethod
    def polydisc(m=2, radii=None, **kw):
        radii = tuple(float(r) for r in (radii or (1.0,) * m))
        kw.setdefault("base_vars", tuple(f"u{j + 1}" for j in range(m)))
        kw.setdefault("basepoint", 0j)
        return SurfaceModel("polydisc", radii, **kw)

    # -- geometry ------------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.base_vars)

    @property
    def var(self) -> str:
        return self.base_vars[0]

    def radial_bounds(self):
        """Shrunk closed working subdomain as (r_in, r_out) for |u|."""
        pad = 1.0 - self.shrink
        if self.kind in ("disc", "polydisc"):
            return 0.0, self.params[0] * self.shrink
        if self.kind == "plane":
            return 0.0, self.params[0]
        r_in, r_out = self.params[0], self.params[1]
        gap = 0.5 * pad * (r_out - r_in)
        return r_in + gap, r_out - gap

    def domain_scale(self) -> float:
        return self.radial_bounds()[1]

    def contains(self, u, margin: float = 0.0):
        r_in, r_out = self.radial_bounds()
        a = np.abs(np.asarray(u, dtype=complex))
        return (a >= r_in + margin if r_in > 0 else a >= 0) & (a <= r_out - margin)

    def sample_radii(self, k: int = 3):
        r_in, r_out = self.radial_bounds()
        lo = r_in if r_in > 0 else r_out / 8.0
        if self.kind in ("annulus", "punctured_plane"):
            return np.exp(np.linspace(np.log(lo), np.log(r_out), k))
        return np.linspace(lo, r_out, k)

    def sample_points(self, n_per_circle: int = 64, k_circles: int = 3) -> np.ndarray:
        """Deterministic sample set on k circles in the working subdomain."""
        pts = []
        for j, r in enumerate(self.sample_radii(k_circles)):
            ang = 2 * np.pi * (np.arange(n_per_circle) + 0.5 * (j % 2)) / n_per_circle
            pts.append(r * np.exp(1j * ang))
        return np.concatenate(pts)

    def loop_paths(self):
        return [Circle(r, label=f"C{j + 1}") for j, r in enumerate(self.loops)]

    # -- theta and V ---------------------------------------------------------

    def theta_at(self, u):
        return self.theta_g(np.asarray(u, dtype=complex))

    def v_at(self, u):
        u = np.asarray(u, dtype=complex)
        return u if self.v_kind == "euler" else np.ones_like(u)

    def flow(self, u, t):
        """Time-t flow of V applied to u."""
        u = np.asarray(u, dtype=complex)
        return u * np.exp(t) if self.v_kind == "euler" else u + t

    def validate_series(self, s: Series):
        if self.kind in ("disc", "polydisc", "plane") and not s.is_zero() and s.k_min < 0:
            raise StructuralError(
                f"negative Laurent exponent {s.k_min} on a {self.kind} model")

    # -- invariants ----------------------------------------------------------

    def _validate(self):
        if self.kind not in ("disc", "annulus", "plane", "punctured_plane", "polydisc"):
            raise StructuralError(f"unknown surface kind {self.kind!r}")
        n_loops = len(self.loops)
        if self.kind in ("disc", "plane", "polydisc") and n_loops != 0:
            raise StructuralError(f"{self.kind} model admits no homology loops")
        if self.kind in ("annulus", "punctured_plane") and n_loops != 1:
            raise StructuralError(f"{self.kind} model requires exactly one loop")
        r_in, r_out = self.radial_bounds()
        for r in self.loops:
            if not (r_in < r < r_out):
                raise StructuralError(f"loop radius {r} not strictly inside the domain")
        if self.v_kind == "euler" and r_in <= 0.0 and self.kind not in (
                "annulus", "punctured_plane"):
            raise StructuralError("Euler field requires 0 outside the domain")
        if self.v_kind not in ("translation", "euler"):
            raise StructuralError(f"unknown vector field kind {self.v_kind!r}")
        self.validate_series(self.theta_g)
        vals = np.abs(self.theta_g(self.sample_points()))
        if vals.size and vals.min() <= THETA_MARGIN:
            raise StructuralError("theta coefficient vanishes on the sampled domain")
        if not bool(np.all(self.contains(self.basepoint))):
            raise StructuralError("basepoint outside the working domain")

    # -- serialization -------------------------------------------------------

    @staticmethod
    def from_dict(d: dict) -> "SurfaceModel":
        kind = d["kind"].lower()
        kw = {}
        if "theta" in d:
            kw["theta_g"] = parse_theta(d["theta"])
        if "V" in d:
            kw["v_kind"] = {"translation": "translation", "euler": "euler"}[d["V"].lower()]
        if "loops" in d:
            kw["loops"] = tuple(d["loops"])
        if "basepoint" in d:
            bp = d["basepoint"]
            kw["basepoint"] = complex(bp[0], bp[1]) if isinstance(bp, (list, tuple)) else complex(bp)
        if "shrink" in d:
            kw["shrink"] = float(d["shrink"])
        if kind == "disc":
            return SurfaceModel.disc(d.get("radius", 1.0), **kw)
        if kind == "annulus":
            return SurfaceModel.annulus(d.get("r_in", 0.5), d.get("r_out", 1.0), **kw)
        if kind == "plane":
            return SurfaceModel.plane(d.get("working_radius", 2.0), **kw)
        if kind == "punctured_plane":
            return SurfaceModel.punctured_plane(d.get("r_in", 0.25), d.get("r_out", 4.0), **kw)
        if kind == "polydisc":
            return SurfaceModel.polydisc(d.get("m", 2), d.get("radii"), **kw)
        raise StructuralError(f"unknown surface kind {kind!r}")


def parse_theta(spec) -> Series:
    """theta specification: 'du', 'du/u', 'u*du', or a series literal dict."""
    if isinstance(spec, dict):
        return series_from_dict(spec)
    s = str(spec).replace(" ", "")
    if s == "du":
        return Series.constant(1.0, "u")
    if s == "du/u":
        return Series.monomial("u", -1)
    if s in ("u*du", "udu"):
        return Series.variable("u")
    raise StructuralError(f"unrecognized theta spec {spec!r}")


def series_from_dict(d: dict) -> Series:
    coeffs = [complex(c[0], c[1]) for c in d["coeffs"]]
    return Series(d.get("var", "u"), int(d.get("kmin", 0)), coeffs)


def series_to_dict(s: Series) -> dict:
    return {"var": s.var or "u", "kmin": s.k_min,
            "kmax": s.k_max if not s.is_zero() else s.k_min,
            "coeffs": [[float(c.real), float(c.imag)] for c in s.coeffs]}


# ---------------------------------------------------------------------------
# base flow maps
# ---------------------------------------------------------------------------

class BaseMap:
    """Reparametrization u -> phi[h](u) of the base via the flow of V.

    ``value`` and ``deriv`` are exact evaluators; ``as_series`` yields a
    truncated series representative over the model's working window when one
    exists (translation flows with polynomial h, Euler flows with constant
    or Taylor h)."""

    def __init__(self, model: SurfaceModel, h: Series):
        self.model = model
        self.h = h

    def value(self, u):
        u = np.asarray(u, dtype=complex)
        if self.model.v_kind == "euler":
            return u * np.exp(self.h(u))
        return u + self.h(u)

    def deriv(self, u):
        u = np.asarray(u, dtype=complex)
        hp = self.h.derivative()(u)
        if self.model.v_kind == "euler":
            return np.exp(self.h(u)) * (1.0 + u * hp)
        return 1.0 + hp

    def as_series(self, max_terms: int = 64) -> Series | None:
        var = self.model.var
        ident = Series.variable(var)
        if self.model.v_kind == "translation":
            return ident + self.h
        if self.h.is_zero() or self.h.is_constant():
            return ident * complex(np.exp(self.h.coeff(0)))
        if self.h.k_min >= 0:
            return ident * exp_series(self.h, max_terms)
        return None

    def is_identity(self) -> bool:
        return self.h.is_zero()


def flow_map(h: Series, model: SurfaceModel, check: bool = True,
             margin_frac: float = 0.02) -> BaseMap:
    """phi[h](u) = flow of V for time h(u) starting at u.

    Sampled containment check: the image of the working subdomain must stay
    inside the full domain with a small margin, else FlowEscape."""
    bm = BaseMap(model, h)
    if check:
        pts = model.sample_points()
        img = bm.value(pts)
        margin = -margin_frac * model.domain_scale()
        r_in, r_out = model.radial_bounds()
        pad = (1.0 - model.shrink)
        lo = r_in * (1 - pad) if r_in > 0 else 0.0
        hi = r_out * (1 + pad) if model.kind != "plane" else np.inf
        bad = (np.abs(img) > hi) | (np.abs(img) < lo)
        if np.any(bad):
            raise FlowEscape("flow image left the domain",
                             witness=complex(pts[bad][0]))
    return bm


def identity_map(model: SurfaceModel) -> BaseMap:
    return BaseMap(model, Series.zero(model.var))


def theta_pullback(h: Series, model: SurfaceModel, check: bool = True):
    """Evaluator for (phi[h])^* theta = g(phi(u)) phi'(u) du."""
    bm = flow_map(h, model, check=check)

    def w(u):
        return model.theta_g(bm.value(u)) * bm.deriv(u)

    return w


def homology_periods(w, model: SurfaceModel, tol: float = 1e-12) -> np.ndarray:
    """Vector of loop integrals of the 1-form w(u) du over the generators."""
    return np.array([path_integral(w, loop, tol=tol) for loop in model.loop_paths()],
                    dtype=complex)
