"""Composable coordinate changes on a chart.

A ``CoordinateChange`` is a polynomial map of the fiber variables over the
base (base variables are fixed pointwise): each target variable is sent to a
jet expression in the source variables.  Fiber-linear changes, shears added
to z, and variable relabelings are all special cases, and arbitrary
compositions remain in this class.  Inverses are computed to the working jet
order by fixed-point iteration around the inverted linear part.
"""

from __future__ import annotations

from .errors import StructuralError
from .linsolve import invert_series_matrix
from .series import FiberMonomial, JetPolynomial, Series


class CoordinateChange:
    """Map of fiber coordinates given by target-variable expressions.

    ``fiber_map[v]`` is the jet expression substituted for the variable v;
    variables absent from the map are left untouched.  ``base_shift``, when
    present, sends the distinguished base variable to u + b for a jet b of
    positive fiber degree (Moser flows move the base by such shifts).
    Expressions must fix the zero section."""

    def __init__(self, fiber_map: dict, label: str = "",
                 base_shift: JetPolynomial | None = None):
        clean = {}
        for var, expr in fiber_map.items():
            if not isinstance(expr, JetPolynomial):
                raise StructuralError("fiber_map values must be jets")
            if not expr.zero_section().is_zero():
                raise StructuralError(
                    f"coordinate change must fix the zero section ({var})")
            clean[var] = expr
        if base_shift is not None:
            if base_shift.is_zero():
                base_shift = None
            elif base_shift.min_fiber_degree() < 1:
                raise StructuralError("base shift must vanish on the zero section")
        self.fiber_map = clean
        self.base_shift = base_shift
        self.label = label

    # -- constructors --------------------------------------------------------

    @staticmethod
    def identity(label: str = "id") -> "CoordinateChange":
        return CoordinateChange({}, label)

    @staticmethod
    def linear(out_vars, in_vars, entries, chart, label: str = "linear"):
        """out_i -> sum_k entries[i][k] * in_k with Series entries."""
        fiber_map = {}
        for i, v in enumerate(out_vars):
            acc = chart.jet_zero()
            for k, w in enumerate(in_vars):
                e = entries[i][k]
                if isinstance(e, Series):
                    if e.is_zero():
                        continue
                    acc = acc + chart.jet_var(w).scale_series(e)
                elif e != 0:
                    acc = acc + chart.jet_var(w) * e
            fiber_map[v] = acc
        return CoordinateChange(fiber_map, label)

    @staticmethod
    def shear(z_var, quadratic: JetPolynomial, label: str = "shear"):
        """z -> z + q with q of fiber degree >= 2."""
        if quadratic.min_fiber_degree() < 2:
            raise StructuralError("shear term must have fiber degree >= 2")
        z = JetPolynomial.variable(z_var, quadratic.degree, quadratic.window)
        return CoordinateChange({z_var: z + quadratic}, label)

    @staticmethod
    def relabel(mapping: dict, chart, label: str = "relabel"):
        """Rename variables: mapping sends old names to new names."""
        return CoordinateChange(
            {old: chart.jet_var(new) for old, new in mapping.items()}, label)

    @staticmethod
    def dilation(chart, t, label: str = "dilation"):
        """Anisotropic weights: z and y1 by t^2, remaining fibers by t."""
        from .errors import DegenerateDilation
        t = complex(t)
        if t == 0:
            raise DegenerateDilation("dilation weight t must be nonzero")
        fiber_map = {}
        for v in chart.fiber_vars:
            w = t * t if v in (chart.z_var, "y1") else t
            fiber_map[v] = chart.jet_var(v) * w
        return CoordinateChange(fiber_map, label=f"{label}(t={t})")

    # -- algebra ---------------------------------------------------------------

    def expr(self, var, degree, window) -> JetPolynomial:
        got = self.fiber_map.get(var)
        if got is not None:
            return got
        return JetPolynomial.variable(var, degree, window)

    def is_identity(self) -> bool:
        return not self.fiber_map and self.base_shift is None

    def apply(self, jet: JetPolynomial) -> JetPolynomial:
        """f -> f o change."""
        return jet.substitute(self.fiber_map, self.base_shift)

    def compose(self, inner: "CoordinateChange") -> "CoordinateChange":
        """self o inner: ``inner`` acts first as a coordinate change."""
        vars_all = set(self.fiber_map) | set(inner.fiber_map)
        out = {}
        for v in vars_all:
            expr = self.fiber_map.get(v)
            if expr is None:
                out[v] = inner.fiber_map[v]
            else:
                out[v] = inner.apply(expr)
        shift = inner.base_shift
        if self.base_shift is not None:
            moved = inner.apply(self.base_shift)
            shift = moved if shift is None else shift + moved
        return CoordinateChange(out, label=f"{self.label}*{inner.label}",
                                base_shift=shift)

    def linear_part(self, fiber_vars):
        """Matrix of Series: row per target var, column per source var."""
        rows = []
        for v in fiber_vars:
            expr = self.fiber_map.get(v)
            row = []
            for w in fiber_vars:
                if expr is None:
                    row.append(Series.constant(1.0) if v == w else Series.zero())
                else:
                    row.append(expr.coeff(FiberMonomial({w: 1})))
            rows.append(row)
        return rows

    def inverse(self, fiber_vars, degree: int, window) -> "CoordinateChange":
        """Inverse to jet order via iteration around the linear part."""
        if self.base_shift is not None:
            raise StructuralError("inverse of a base-shifting change is not supported")
        lin = self.linear_part(fiber_vars)
        inv_entries = invert_series_matrix(lin, degree, window)

        def linear_apply(entries, exprs):
            out = {}
            for i, v in enumerate(fiber_vars):
                acc = JetPolynomial.zero(degree, window)
                for k, w in enumerate(fiber_vars):
                    e = entries[i][k]
                    if not e.is_zero():
                        acc = acc + exprs[w].scale_series(e)
                out[v] = acc
            return out

        ident = {v: JetPolynomial.variable(v, degree, window) for v in fiber_vars}
        higher = {}
        for v in fiber_vars:
            expr = self.expr(v, degree, window)
            lin_v = JetPolynomial(degree, {}, window)
            for k, w in enumerate(fiber_vars):
                e = lin[fiber_vars.index(v)][k]
                if not e.is_zero():
                    lin_v = lin_v + ident[w].scale_series(e)
            higher[v] = expr - lin_v
        psi = linear_apply(inv_entries, ident)
        for _ in range(degree):
            corrected = {v: ident[v] - higher[v].substitute(psi) for v in fiber_vars}
            psi = linear_apply(inv_entries, corrected)
        return CoordinateChange(psi, label=f"inv({self.label})")

    def __repr__(self):
        return f"CoordinateChange({self.label or 'custom'}, vars={sorted(self.fiber_map)})"


def substitute(jet: JetPolynomial, change: CoordinateChange) -> JetPolynomial:
    """Composition f o change as a jet, truncated to f's degree and window."""
    return change.apply(jet)


def compose_all(changes) -> CoordinateChange:
    """Compose a change log in application order: first entry acts first."""
    out = CoordinateChange.identity()
    for c in changes:
        out = out.compose(c)
    return out
