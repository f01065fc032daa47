"""Exterior calculus on jet-coefficient differential forms.

Forms are stored against the chart's fixed coframe order (theta_1..theta_m,
d fiber_1, ..., dz); a k-form keeps a jet coefficient per strictly
increasing slot tuple, so antisymmetry is implicit.  The only forms treated
as first-class citizens are 1-forms, 2-forms and the top form; the generic
``Form`` container exists to carry the iterated wedges between them.

The exterior derivative uses the frame dual to the coframe: V_j = g_j^{-1}
d/du_j on the base, plain partials on the fiber.  All shipped base models
have d theta_j = 0, which this module assumes throughout.

The Reeb field of a contact form is solved as a linear system over the jet
ring: the defining conditions (pairing 1 with the form, annihilating its
differential) are triangular in the fiber grading once the contact
certificate holds, so unit pivots always exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import Chart
from .coords import CoordinateChange
from .errors import NotContact, StructuralError
from .linsolve import solve_jet_linear
from .series import JetPolynomial, Series

TOL_CONTACT = 1e-9
TOL_REEB = 1e-10


class Form:
    """k-form with JetPolynomial coefficients over a chart."""

    def __init__(self, chart: Chart, k: int, terms: dict | None = None):
        self.chart = chart
        self.k = int(k)
        clean = {}
        for key, jet in (terms or {}).items():
            key = tuple(chart.slot_index(s) for s in key)
            if len(key) != self.k or list(key) != sorted(set(key)):
                raise StructuralError(f"bad slot tuple {key} for a {self.k}-form")
            jet = chart.coerce(jet)
            if not jet.is_zero():
                clean[key] = clean[key] + jet if key in clean else jet
        self.terms = {key: jet for key, jet in clean.items() if not jet.is_zero()}

    # -- structure -------------------------------------------------------------

    def coeff(self, key) -> JetPolynomial:
        if not isinstance(key, tuple):
            key = (key,)
        key = tuple(self.chart.slot_index(s) for s in key)
        return self.terms.get(key, self.chart.jet_zero())

    def is_zero(self) -> bool:
        return not self.terms

    def sup_coeff(self) -> float:
        return max((j.sup_coeff() for j in self.terms.values()), default=0.0)

    def truncated(self) -> bool:
        return any(j.truncated for j in self.terms.values())

    def _same_chart(self, other: "Form"):
        if self.chart is not other.chart and self.chart != other.chart:
            raise StructuralError("forms live on different charts")

    # -- linear algebra ----------------------------------------------------------

    def __add__(self, other: "Form") -> "Form":
        self._same_chart(other)
        if self.k != other.k:
            raise StructuralError("cannot add forms of different degree")
        out = dict(self.terms)
        for key, jet in other.terms.items():
            out[key] = out[key] + jet if key in out else jet
        return Form(self.chart, self.k, out)

    def __neg__(self) -> "Form":
        return Form(self.chart, self.k, {k: -j for k, j in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, scalar) -> "Form":
        if isinstance(scalar, (JetPolynomial, Series)):
            return Form(self.chart, self.k,
                        {k: j * scalar if isinstance(scalar, JetPolynomial)
                         else j.scale_series(scalar)
                         for k, j in self.terms.items()})
        return Form(self.chart, self.k,
                    {k: j * scalar for k, j in self.terms.items()})

    __rmul__ = __mul__

    # -- wedge -------------------------------------------------------------------

    def wedge(self, other: "Form") -> "Form":
        self._same_chart(other)
        out: dict = {}
        for ka, ja in self.terms.items():
            sa = set(ka)
            for kb, jb in other.terms.items():
                if sa & set(kb):
                    continue
                sign, key = _merge_sign(ka, kb)
                jet = ja * jb
                if sign < 0:
                    jet = -jet
                out[key] = out[key] + jet if key in out else jet
        return Form(self.chart, self.k + other.k, out)

    # -- restriction ----------------------------------------------------------------

    def zero_section_values(self, points) -> dict:
        """Slot-tuple -> array of coefficient values on the zero section."""
        pts = np.asarray(points, dtype=complex)
        return {key: jet.zero_section()(pts) for key, jet in self.terms.items()}

    def __repr__(self):
        labels = self.chart.slots
        bits = []
        for key in sorted(self.terms):
            name = "^".join(labels[i] for i in key) or "1"
            bits.append(f"{name}: {self.terms[key]!r}")
        return f"Form{self.k}(" + "; ".join(bits) + ")"


def _merge_sign(a: tuple, b: tuple):
    """Sign and sorted tuple for the concatenation of disjoint sorted tuples."""
    merged = a + b
    inversions = sum(1 for x in a for y in b if x > y)
    return (-1) ** (inversions % 2), tuple(sorted(merged))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def one_form(chart: Chart, theta=None, fiber=None) -> Form:
    """Build a 1-form from theta-slot coefficients and d(fiber) coefficients.

    ``theta`` is a single jet (m = 1) or a sequence; ``fiber`` maps fiber
    variable names to jets."""
    terms = {}
    if theta is not None:
        seq = theta if isinstance(theta, (list, tuple)) else [theta]
        for j, c in enumerate(seq):
            terms[(j,)] = chart.coerce(c)
    for name, c in (fiber or {}).items():
        terms[(chart.slot_index(name),)] = chart.coerce(c)
    return Form(chart, 1, terms)


def standard_contact_form(chart: Chart) -> Form:
    """dz + sum_j x_j dy_j with x_1 the base variable."""
    n = chart.n
    if chart.m != 1:
        raise StructuralError("standard form preset expects a curve base")
    fiber = {chart.z_var: chart.jet_const(1.0), "y1": chart.jet_base()}
    for j in range(2, n + 1):
        fiber[f"y{j}"] = chart.jet_var(f"x{j}")
    return one_form(chart, fiber=fiber)


def normal_contact_form(chart: Chart) -> Form:
    """dz - sum_{j<=m} y_j theta_j - sum_{i>m} y_i dx_i."""
    n, m = chart.n, chart.m
    theta = [-chart.jet_var(f"y{j}") for j in range(1, m + 1)]
    fiber = {chart.z_var: chart.jet_const(1.0)}
    for i in range(m + 1, n + 1):
        fiber[f"x{i}"] = -chart.jet_var(f"y{i}")
    return one_form(chart, theta=theta, fiber=fiber)


# ---------------------------------------------------------------------------
# exterior derivative, interior product, wedge powers
# ---------------------------------------------------------------------------

def _theta_inverse(chart: Chart, j: int) -> Series:
    g = chart.theta_series(j)
    span = chart.window[1] - chart.window[0]
    return g.inverse(span)


def exterior_derivative(omega: Form) -> Form:
    """d on forms; base 1-forms theta_j are closed in all shipped models."""
    chart = omega.chart
    out: dict = {}
    for key, jet in omega.terms.items():
        # base direction: V_j(c) theta_j ^ sigma
        for j in range(chart.m):
            if j == 0:
                dc = jet.derivative_base()
                if dc.is_zero():
                    continue
                vc = dc.scale_series(_theta_inverse(chart, 0))
            else:
                continue  # coefficients depend on the distinguished variable only
            _accumulate(out, j, key, vc)
        # fiber directions
        for idx, var in enumerate(chart.fiber_vars):
            slot = chart.m + idx
            dc = jet.derivative_fiber(var)
            if not dc.is_zero():
                _accumulate(out, slot, key, dc)
    return Form(chart, omega.k + 1, out)


def _accumulate(out: dict, slot: int, key: tuple, jet: JetPolynomial):
    if slot in key:
        return
    sign, merged = _merge_sign((slot,), key)
    if sign < 0:
        jet = -jet
    out[merged] = out[merged] + jet if merged in out else jet


class VectorFieldJet:
    """Vector field in the frame dual to the chart coframe.

    ``components[s]`` multiplies V_s (base slots) or d/d(fiber var) (fiber
    slots), matching the coframe indexing of Form."""

    def __init__(self, chart: Chart, components: dict):
        self.chart = chart
        comps = {}
        for key, jet in components.items():
            idx = chart.slot_index(key)
            jet = chart.coerce(jet)
            if not jet.is_zero():
                comps[idx] = comps[idx] + jet if idx in comps else jet
        self.components = comps

    def component(self, key) -> JetPolynomial:
        return self.components.get(self.chart.slot_index(key), self.chart.jet_zero())

    def sup_coeff(self) -> float:
        return max((j.sup_coeff() for j in self.components.values()), default=0.0)

    def __add__(self, other: "VectorFieldJet") -> "VectorFieldJet":
        out = dict(self.components)
        for idx, jet in other.components.items():
            out[idx] = out[idx] + jet if idx in out else jet
        return VectorFieldJet(self.chart, out)

    def __mul__(self, scalar) -> "VectorFieldJet":
        return VectorFieldJet(self.chart,
                              {i: j * scalar for i, j in self.components.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __repr__(self):
        labels = self.chart.slots
        bits = [f"{labels[i]}: {j!r}" for i, j in sorted(self.components.items())]
        return "VectorFieldJet(" + "; ".join(bits) + ")"


def interior_product(v: VectorFieldJet, omega: Form):
    """Contraction i_V omega; returns a jet for 1-forms, else a Form."""
    chart = omega.chart
    if omega.k == 1:
        acc = chart.jet_zero()
        for key, jet in omega.terms.items():
            comp = v.components.get(key[0])
            if comp is not None:
                acc = acc + comp * jet
        return acc
    out: dict = {}
    for key, jet in omega.terms.items():
        for pos, slot in enumerate(key):
            comp = v.components.get(slot)
            if comp is None:
                continue
            rest = key[:pos] + key[pos + 1 :]
            term = comp * jet
            if pos % 2:
                term = -term
            out[rest] = out[rest] + term if rest in out else term
    return Form(chart, omega.k - 1, out)


def wedge_power_top(alpha: Form, n: int) -> Form:
    """alpha ^ (d alpha)^n as a top-degree form (single coefficient)."""
    chart = alpha.chart
    if chart.dim != 2 * n + 1:
        raise StructuralError(
            f"chart dimension {chart.dim} does not match 2n+1 = {2 * n + 1}")
    d_alpha = exterior_derivative(alpha)
    acc = alpha
    for _ in range(n):
        acc = acc.wedge(d_alpha)
    return acc


def top_coefficient(top: Form) -> JetPolynomial:
    full = tuple(range(top.chart.dim))
    return top.terms.get(full, top.chart.jet_zero())


# ---------------------------------------------------------------------------
# contact certificates and the Reeb field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContactCertificate:
    n: int
    degree: int
    window: tuple
    truncated: bool
    min_abs: float
    tol: float
    witness: complex
    passed: bool
    n_samples: int

    def as_dict(self):
        return {"n": self.n, "degree": self.degree, "window": list(self.window),
                "truncated": self.truncated, "min_abs": self.min_abs,
                "tol": self.tol, "passed": self.passed,
                "witness": [self.witness.real, self.witness.imag],
                "n_samples": self.n_samples}


def contact_check(alpha: Form, n: int, tol: float = TOL_CONTACT,
                  raise_on_fail: bool = True) -> ContactCertificate:
    """Certify alpha ^ (d alpha)^n != 0 along the zero section.

    The top coefficient is restricted to the zero section and sampled over
    the model's working circles; pass requires min |value| > tol."""
    chart = alpha.chart
    top = wedge_power_top(alpha, n)
    coeff = top_coefficient(top)
    restricted = coeff.zero_section()
    pts = chart.model.sample_points()
    vals = np.abs(restricted(pts)) if not restricted.is_zero() else np.zeros(len(pts))
    i_min = int(np.argmin(vals)) if vals.size else 0
    min_abs = float(vals[i_min]) if vals.size else 0.0
    cert = ContactCertificate(
        n=n, degree=chart.degree, window=chart.window,
        truncated=top.truncated(), min_abs=min_abs, tol=tol,
        witness=complex(pts[i_min]) if vals.size else 0j,
        passed=min_abs > tol, n_samples=len(pts))
    if raise_on_fail and not cert.passed:
        raise NotContact(
            f"alpha ^ (d alpha)^{n} has |coefficient| = {min_abs:.3e} <= {tol}",
            witness=cert.witness)
    return cert


def reeb_field(alpha: Form, n: int | None = None,
               tol: float = TOL_REEB, check_contact: bool = True) -> VectorFieldJet:
    """Unique field with alpha(Theta) = 1 and i_Theta d alpha = 0.

    Solved degreewise over the jet ring; both defining identities are
    verified on the result to ``tol``."""
    chart = alpha.chart
    if n is None:
        n = chart.n
    if check_contact:
        contact_check(alpha, n)
    d_alpha = exterior_derivative(alpha)
    dim = chart.dim
    # unknown component per coframe slot; rows: pairing row then one per slot
    rows = [[alpha.coeff((s,)) for s in range(dim)]]
    rhs = [chart.jet_const(1.0)]
    for t in range(dim):
        row = [chart.jet_zero()] * dim
        for (a, b), w in d_alpha.terms.items():
            if b == t:
                row[a] = row[a] + w
            elif a == t:
                row[b] = row[b] - w
        rows.append(row)
        rhs.append(chart.jet_zero())
    try:
        x, leftovers = solve_jet_linear(rows, rhs, samples=chart.model.sample_points())
    except Exception as e:
        raise NotContact(f"Reeb system is degenerate: {e}") from e
    theta = VectorFieldJet(chart, {s: x[s] for s in range(dim)})
    r1 = (interior_product(theta, alpha) - chart.jet_const(1.0)).sup_coeff()
    r2 = interior_product(theta, d_alpha).sup_coeff()
    leftover = max((j.sup_coeff() for j in leftovers), default=0.0)
    if max(r1, r2, leftover) > tol:
        raise NotContact(
            f"Reeb residuals too large: pairing {r1:.2e}, contraction {r2:.2e}")
    return theta


def reeb_residuals(theta: VectorFieldJet, alpha: Form):
    d_alpha = exterior_derivative(alpha)
    r1 = (interior_product(theta, alpha) - alpha.chart.jet_const(1.0)).sup_coeff()
    r2 = interior_product(theta, d_alpha).sup_coeff()
    return r1, r2


# ---------------------------------------------------------------------------
# pullback
# ---------------------------------------------------------------------------

def _differential_as_form(chart: Chart, expr: JetPolynomial) -> Form:
    """d of a jet function, as a 1-form in the chart coframe."""
    out = {}
    dbase = expr.derivative_base()
    if not dbase.is_zero():
        out[(0,)] = dbase.scale_series(_theta_inverse(chart, 0))
    for idx, w in enumerate(chart.fiber_vars):
        dw = expr.derivative_fiber(w)
        if not dw.is_zero():
            out[(chart.m + idx,)] = dw
    return Form(chart, 1, out)


def _slot_image_differentials(chart: Chart, change: CoordinateChange) -> dict:
    """Pullback of each coframe element under the change, as a 1-form.

    theta slots: phi^* theta = g(u + b) d(u + b); fiber slots: d(image)."""
    from .series import taylor_shift
    diffs = {}
    b = change.base_shift
    for slot in range(chart.dim):
        if slot < chart.m:
            if slot > 0 or b is None or b.is_zero():
                diffs[slot] = Form(chart, 1, {(slot,): chart.jet_const(1.0)})
                continue
            g = chart.theta_series(0)
            g_shift = taylor_shift(g, b)
            du_new = Form(chart, 1, {(0,): chart.jet_series(_theta_inverse(chart, 0))})
            du_new = du_new + _differential_as_form(chart, b)
            diffs[slot] = du_new * g_shift
        else:
            var = chart.slot_fiber_var(slot)
            expr = change.fiber_map.get(var)
            if expr is None and (b is None or b.is_zero()):
                diffs[slot] = Form(chart, 1, {(slot,): chart.jet_const(1.0)})
            else:
                expr = expr if expr is not None else chart.jet_var(var)
                diffs[slot] = _differential_as_form(chart, expr)
    return diffs


def pullback_form(omega: Form, change: CoordinateChange) -> Form:
    """Chain-rule pullback of a form under a coordinate change.

    Coefficients are composed with the change; each coframe slot is replaced
    by the differential of its image (theta slots only move under a base
    shift).  Works for any form degree; truncation to the working jet order
    happens inside the substitutions."""
    chart = omega.chart
    diffs = _slot_image_differentials(chart, change)
    out = Form(chart, omega.k, {})
    for key, coeff in omega.terms.items():
        piece = None
        for slot in key:
            piece = diffs[slot] if piece is None else piece.wedge(diffs[slot])
        if piece is None:
            piece = Form(chart, 0, {(): chart.jet_const(1.0)})
        out = out + piece * change.apply(coeff)
    return out
