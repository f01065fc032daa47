"""Charts on the model space: base surface x fiber C^{2n+1-m}.

A chart fixes the coframe ordering used everywhere in the kernel:

    (theta_1, ..., theta_m, d fiber_1, ..., d fiber_p, d z)

with the z variable last.  All wedge signs derive from this order.  The dual
frame is (V_1, ..., V_m, d/d fiber_1, ..., d/dz) with V_j = g_j(u_j)^{-1}
d/du_j, so each theta_j is closed by construction (g_j depends on u_j only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import StructuralError
from .series import DEFAULT_DEGREE, DEFAULT_WINDOW, JetPolynomial, Series
from .surfaces import SurfaceModel


@dataclass(frozen=True)
class Chart:
    model: SurfaceModel
    fiber_vars: tuple
    degree: int = DEFAULT_DEGREE
    window: tuple = DEFAULT_WINDOW

    def __post_init__(self):
        object.__setattr__(self, "fiber_vars", tuple(self.fiber_vars))
        if len(self.fiber_vars) < 1:
            raise StructuralError("chart needs at least one fiber variable")
        if len(set(self.fiber_vars)) != len(self.fiber_vars):
            raise StructuralError("duplicate fiber variable names")

    # -- dimensions ----------------------------------------------------------

    @property
    def m(self) -> int:
        return self.model.m

    @property
    def dim(self) -> int:
        return self.m + len(self.fiber_vars)

    @property
    def n(self) -> int:
        if self.dim % 2 == 0:
            raise StructuralError(f"chart dimension {self.dim} is even")
        return (self.dim - 1) // 2

    @property
    def z_var(self):
        return self.fiber_vars[-1]

    # -- coframe bookkeeping --------------------------------------------------

    @property
    def slots(self) -> tuple:
        """Coframe slot labels in the fixed global order."""
        return tuple(f"theta:{v}" for v in self.model.base_vars) + \
            tuple(f"d:{v}" for v in self.fiber_vars)

    def slot_index(self, label) -> int:
        """Accepts 'theta:u' / 'd:y1' labels, bare fiber names, or indices."""
        if isinstance(label, int):
            return label
        if label in self.fiber_vars:
            return self.m + self.fiber_vars.index(label)
        try:
            return self.slots.index(label)
        except ValueError:
            raise StructuralError(f"unknown coframe slot {label!r}") from None

    def theta_series(self, j: int) -> Series:
        """Coefficient g_j with theta_j = g_j(u_j) du_j."""
        if j == 0:
            return self.model.theta_g
        return Series.constant(1.0, self.model.base_vars[j])

    def slot_fiber_var(self, idx: int):
        """Fiber variable of a d-slot, or None for a theta slot."""
        return self.fiber_vars[idx - self.m] if idx >= self.m else None

    # -- jet constructors ------------------------------------------------------

    def jet_zero(self) -> JetPolynomial:
        return JetPolynomial.zero(self.degree, self.window)

    def jet_const(self, c) -> JetPolynomial:
        return JetPolynomial.constant(c, self.degree, self.window)

    def jet_series(self, s: Series) -> JetPolynomial:
        return JetPolynomial.from_series(s, self.degree, self.window)

    def jet_var(self, name) -> JetPolynomial:
        if name not in self.fiber_vars:
            raise StructuralError(f"{name!r} is not a fiber variable of this chart")
        return JetPolynomial.variable(name, self.degree, self.window)

    def jet_base(self) -> JetPolynomial:
        """The distinguished base variable as a degree-0 jet."""
        return self.jet_series(Series.variable(self.model.var))

    def coerce(self, value) -> JetPolynomial:
        if isinstance(value, JetPolynomial):
            if value.degree != self.degree:
                raise StructuralError("jet degree does not match chart")
            return value
        if isinstance(value, Series):
            return self.jet_series(value)
        return self.jet_const(value)

    def with_fiber_vars(self, fiber_vars) -> "Chart":
        return Chart(self.model, tuple(fiber_vars), self.degree, self.window)

    def with_degree(self, degree) -> "Chart":
        return Chart(self.model, self.fiber_vars, degree, self.window)


def zeta_chart(model: SurfaceModel, n: int, degree=DEFAULT_DEGREE,
               window=DEFAULT_WINDOW) -> Chart:
    """Pre-normalization chart with fiber coordinates zeta_1..zeta_{2n+1-m}."""
    count = 2 * n + 1 - model.m
    names = tuple(f"zeta{j + 1}" for j in range(count))
    return Chart(model, names, degree, window)


def darboux_chart(model: SurfaceModel, n: int, degree=DEFAULT_DEGREE,
                  window=DEFAULT_WINDOW) -> Chart:
    """Normalized chart (x_{m+1}..x_n, y_1..y_n, z) with z last."""
    m = model.m
    if n < m:
        raise StructuralError("need n >= base dimension m")
    xs = tuple(f"x{j}" for j in range(m + 1, n + 1))
    ys = tuple(f"y{j}" for j in range(1, n + 1))
    return Chart(model, xs + ys + ("z",), degree, window)
