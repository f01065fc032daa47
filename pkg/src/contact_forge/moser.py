"""Moser's method at jet level.

Given a contact form beta = alpha + remainder with the remainder vanishing
on the zero section, the interpolation alpha_t = alpha + t (beta - alpha)
stays contact near the zero section, and the flow of

    V_t = h_t Theta_t + Y_t

carries alpha to beta-pulled-back: phi_1^* beta = alpha.  Theta_t is the
Reeb field of alpha_t; h_t solves the transport equation
Theta_t(h_t) = Theta_t . (alpha - beta) with h_t = 0 on {z = 0}, which is
triangular in powers of z because Theta_t = d/dz plus higher jets; Y_t is
the unique solution of  (beta - alpha) + d h_t + Y_t . d alpha_t = 0
tangent to ker alpha_t.  All three are recomputed at every Runge-Kutta
stage time (no interpolation), and the flow is integrated as a jet-valued
ODE: the map state is a base shift plus one expression per fiber variable.

Everything here is formal in the fiber grading.  Products and solves are
exact through the truncation degree, so the only error sources are the
t-discretization (4th order) and the documented top-slice loss; callers
certify residuals on fiber degrees strictly below the working truncation.

The second-order variant (tangent_normalize) handles a pair alpha, beta
agreeing to first order along the zero section: a symplectic Moser stage on
the slice {z = 0} driven by a radial-homotopy primitive, a Reeb-line
extension solved as a triangular PDE in z, and a final exact-stage flow
along -G Theta_t for a primitive G of the remaining closed defect.  The
composite fixes the zero section with identity linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import Chart
from .coords import CoordinateChange
from .errors import (FlowDiverged, HypothesisViolation, NotContact,
                     StructuralError)
from .forms import (Form, VectorFieldJet, _differential_as_form, contact_check,
                    exterior_derivative, interior_product, pullback_form)
from .linsolve import solve_jet_linear
from .series import JetPolynomial, Series

TOL_ZERO_SECTION = 1e-12
TOL_SOLVE = 1e-11
DEFAULT_T_STEPS = 100
DEGREE_MARGIN = 1


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------

def lift_form(form: Form, chart: Chart) -> Form:
    """Rebuild a form on a chart with a higher truncation degree."""
    terms = {key: JetPolynomial(chart.degree, jet.terms, chart.window, jet.truncated)
             for key, jet in form.terms.items()}
    return Form(chart, form.k, terms)


class MoserProblem:
    """alpha (normal shape), beta = alpha + remainder, and solver caches."""

    def __init__(self, alpha: Form, beta: Form, t_steps: int = DEFAULT_T_STEPS,
                 check: bool = True):
        if alpha.chart is not beta.chart and alpha.chart != beta.chart:
            raise StructuralError("alpha and beta live on different charts")
        self.chart = alpha.chart
        self.alpha = alpha
        self.beta = beta
        self.rho = beta - alpha
        self.t_steps = int(t_steps)
        self.degree = self.chart.degree
        zs = max((j.zero_section().sup_coeff() for j in self.rho.terms.values()),
                 default=0.0)
        if zs > TOL_ZERO_SECTION:
            raise StructuralError(
                f"beta - alpha does not vanish on the zero section ({zs:.2e})")
        if check:
            for t in (0.0, 0.5, 1.0):
                contact_check(self.alpha + self.rho * t, self.chart.n)
        self._d_alpha = exterior_derivative(alpha)
        self._d_rho = exterior_derivative(self.rho)
        self._samples = self.chart.model.sample_points()
        self._field_cache: dict = {}

    # -- t-dependent assembly ------------------------------------------------

    def alpha_t(self, t: float) -> Form:
        return self.alpha + self.rho * t

    def d_alpha_t(self, t: float) -> Form:
        return self._d_alpha + self._d_rho * t

    def _system_rows(self, t: float):
        """Rows of the pairing + contraction system shared by Reeb and Y."""
        chart = self.chart
        dim = chart.dim
        a_t = self.alpha_t(t)
        d_t = self.d_alpha_t(t)
        rows = [[a_t.coeff((s,)) for s in range(dim)]]
        for tgt in range(dim):
            row = [chart.jet_zero()] * dim
            for (a, b), w in d_t.terms.items():
                if b == tgt:
                    row[a] = row[a] + w
                elif a == tgt:
                    row[b] = row[b] - w
            rows.append(row)
        return rows


# ---------------------------------------------------------------------------
# stage solves
# ---------------------------------------------------------------------------

def _reeb_at(problem: MoserProblem, t: float) -> VectorFieldJet:
    chart = problem.chart
    rows = problem._system_rows(t)
    rhs = [chart.jet_const(1.0)] + [chart.jet_zero()] * chart.dim
    try:
        x, leftovers = solve_jet_linear(rows, rhs, samples=problem._samples)
    except Exception as e:
        raise NotContact(f"degenerate Reeb system at t={t}: {e}") from e
    leftover = max((j.up_to_degree(chart.degree - 1).sup_coeff()
                    for j in leftovers), default=0.0)
    if leftover > TOL_SOLVE:
        raise NotContact(f"inconsistent Reeb system at t={t} ({leftover:.2e})")
    return VectorFieldJet(chart, dict(enumerate(x)))


def apply_vector_field(v: VectorFieldJet, f: JetPolynomial) -> JetPolynomial:
    """Directional derivative V(f) in the chart frame."""
    return interior_product(v, _differential_as_form(v.chart, f))


def solve_h(problem: MoserProblem, t: float,
            theta_t: VectorFieldJet | None = None) -> JetPolynomial:
    """Transport solve: Theta_t(h) = Theta_t . (alpha - beta), h|_{z=0} = 0.

    Solved by iterated z-integration; the z-component of the Reeb field is a
    unit, so the fixed point is reached within the truncation degree."""
    chart = problem.chart
    theta = theta_t if theta_t is not None else _reeb_at(problem, t)
    rhs = -interior_product(theta, problem.rho)
    return _transport_solve(theta, rhs, chart, samples=problem._samples)


def _transport_solve(theta: VectorFieldJet, rhs: JetPolynomial, chart: Chart,
                     samples=None, init: JetPolynomial | None = None,
                     tol: float = TOL_SOLVE) -> JetPolynomial:
    z_slot = chart.slot_index(chart.z_var)
    e = theta.component(z_slot)
    e_inv = e.invert_unit(samples=samples)
    others = [(s, c) for s, c in theta.components.items() if s != z_slot]

    def sideways(f):
        acc = chart.jet_zero()
        for s, c in others:
            if s < chart.m:
                df = f.derivative_base()
                if not df.is_zero():
                    from .forms import _theta_inverse
                    acc = acc + c * df.scale_series(_theta_inverse(chart, s))
            else:
                df = f.derivative_fiber(chart.slot_fiber_var(s))
                if not df.is_zero():
                    acc = acc + c * df
        return acc

    h = init if init is not None else chart.jet_zero()
    for _ in range(2 * (chart.degree + 2)):
        integrand = (rhs - sideways(h)) * e_inv
        new_h = integrand.antiderivative_fiber(chart.z_var)
        if init is not None:
            new_h = new_h + init
        if (new_h - h).sup_coeff() < 1e-15:
            h = new_h
            break
        h = new_h
    resid = (apply_vector_field(theta, h) - rhs).up_to_degree(chart.degree - 1)
    if resid.sup_coeff() > tol:
        raise NotContact(f"transport solve residual {resid.sup_coeff():.2e}")
    return h


def solve_Y(problem: MoserProblem, t: float, h_t: JetPolynomial,
            theta_t: VectorFieldJet | None = None) -> VectorFieldJet:
    """Symplectic solve: Y tangent to ker alpha_t with
    (beta - alpha) + dh_t + Y . d alpha_t = 0."""
    rhs_form = -(problem.rho + _differential_as_form(problem.chart, h_t))
    return _solve_y_system(problem._system_rows(t), rhs_form, problem.chart,
                           problem._samples, t)


def _solve_y_system(rows, rhs_form: Form, chart: Chart, samples, t) -> VectorFieldJet:
    rhs = [chart.jet_zero()] + [rhs_form.coeff((s,)) for s in range(chart.dim)]
    try:
        x, leftovers = solve_jet_linear(rows, rhs, samples=samples)
    except Exception as e:
        raise NotContact(f"degenerate symplectic system at t={t}: {e}") from e
    leftover = max((j.up_to_degree(chart.degree - 1).sup_coeff()
                    for j in leftovers), default=0.0)
    if leftover > TOL_SOLVE:
        raise NotContact(f"inconsistent symplectic system at t={t} ({leftover:.2e})")
    return VectorFieldJet(chart, dict(enumerate(x)))


def moser_field(problem: MoserProblem, t: float) -> dict:
    """Coordinate components of V_t = h_t Theta_t + Y_t (cached per t).

    Returns {'__base__': du/dt jet, fiber var: d(var)/dt jet}."""
    cached = problem._field_cache.get(t)
    if cached is not None:
        return cached
    chart = problem.chart
    theta = _reeb_at(problem, t)
    h = solve_h(problem, t, theta)
    y = solve_Y(problem, t, h, theta)
    v = theta * h + y
    comps = _coordinate_components(v)
    zs = max((c.zero_section().sup_coeff() for c in comps.values()), default=0.0)
    if zs > TOL_ZERO_SECTION:
        raise NotContact(f"Moser field fails to vanish on the zero section ({zs:.2e})")
    problem._field_cache[t] = comps
    return comps


def _coordinate_components(v: VectorFieldJet) -> dict:
    """Frame components -> coordinate components (du/dt includes 1/g)."""
    chart = v.chart
    out = {}
    base = v.component(0)
    if not base.is_zero():
        from .forms import _theta_inverse
        out["__base__"] = base.scale_series(_theta_inverse(chart, 0))
    else:
        out["__base__"] = chart.jet_zero()
    for idx, var in enumerate(chart.fiber_vars):
        out[var] = v.component(chart.m + idx)
    return out


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------

@dataclass
class FlowJet:
    final: CoordinateChange
    snapshots: list = field(default_factory=list)     # (t, CoordinateChange)
    checks: dict = field(default_factory=dict)

    def as_change(self) -> CoordinateChange:
        return self.final


def _state_to_change(chart: Chart, state: dict, label: str) -> CoordinateChange:
    fiber_map = {v: state[v] for v in chart.fiber_vars}
    return CoordinateChange(fiber_map, label=label, base_shift=state["__base__"])


def _flow_of_field(chart: Chart, field_at, t_steps: int, label: str,
                   snapshot_every: int = 0, t_end: float = 1.0) -> FlowJet:
    """RK4 integration of d phi/dt = field(t) o phi from the identity."""
    state = {"__base__": chart.jet_zero()}
    for v in chart.fiber_vars:
        state[v] = chart.jet_var(v)
    keys = list(state.keys())

    def compose(comps, st):
        fiber_map = {v: st[v] for v in chart.fiber_vars}
        shift = st["__base__"]
        return {k: comps[k].substitute(fiber_map, shift) for k in keys}

    def axpy(st, c, vel):
        return {k: st[k] + vel[k] * c for k in keys}

    snapshots = []
    dt = t_end / t_steps
    sup0 = max(st.sup_coeff() for st in state.values())
    zero_fix = 0.0
    for k in range(t_steps):
        t0 = k * dt
        f1 = field_at(t0)
        f2 = field_at(t0 + dt / 2)
        f4 = field_at(t0 + dt)
        k1 = compose(f1, state)
        k2 = compose(f2, axpy(state, dt / 2, k1))
        k3 = compose(f2, axpy(state, dt / 2, k2))
        k4 = compose(f4, axpy(state, dt, k3))
        for key in keys:
            state[key] = state[key] + (k1[key] + 2 * k2[key] + 2 * k3[key]
                                       + k4[key]) * (dt / 6)
        zs = max(st.zero_section().sup_coeff() for st in state.values())
        zero_fix = max(zero_fix, zs)
        if zs > TOL_ZERO_SECTION:
            raise FlowDiverged(f"flow left the zero section fixed only to {zs:.2e}")
        sup = max(st.sup_coeff() for st in state.values())
        if sup > 1e3 * max(sup0, 1.0):
            raise FlowDiverged(f"jet coefficients grew to {sup:.2e} at step {k}")
        if snapshot_every and (k + 1) % snapshot_every == 0:
            snapshots.append((t0 + dt, _state_to_change(chart, state,
                                                        f"{label}@t={t0 + dt:.3f}")))
    final = _state_to_change(chart, state, label)
    return FlowJet(final=final, snapshots=snapshots,
                   checks={"zero_section_sup": zero_fix, "t_steps": t_steps})


def integrate_flow(problem: MoserProblem, snapshot_every: int = 0) -> FlowJet:
    """Flow of the Moser field over t in [0, 1]."""
    return _flow_of_field(problem.chart, lambda t: moser_field(problem, t),
                          problem.t_steps, "moser-flow", snapshot_every)


# ---------------------------------------------------------------------------
# end-to-end normalization
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    max_residual: float
    residual_by_degree: dict
    certified_degrees: list
    excluded_degrees: list
    t_steps: int
    working_degree: int

    def as_dict(self):
        return {"max_residual": self.max_residual,
                "residual_by_degree": {str(k): v for k, v in
                                       self.residual_by_degree.items()},
                "certified_degrees": self.certified_degrees,
                "excluded_degrees": self.excluded_degrees,
                "t_steps": self.t_steps, "working_degree": self.working_degree}


def form_residual_by_degree(diff: Form, max_degree: int) -> dict:
    out = {}
    for k in range(max_degree + 1):
        out[k] = max((jet.part_of_degree(k).sup_coeff()
                      for jet in diff.terms.values()), default=0.0)
    return out


def moser_normalize(beta: Form, alpha: Form, t_steps: int = DEFAULT_T_STEPS,
                    degree_margin: int = DEGREE_MARGIN, snapshot_every: int = 0):
    """Flow phi with phi^* beta = alpha, verified degreewise.

    The solve runs at an internally raised truncation (degree + margin) so
    that certified degrees <= degree - 1 carry pure time-discretization
    error; the top slices are excluded as documented truncation loss."""
    chart = alpha.chart
    d_work = chart.degree + degree_margin
    chart_w = chart.with_degree(d_work)
    alpha_w = lift_form(alpha, chart_w)
    beta_w = lift_form(beta, chart_w)
    problem = MoserProblem(alpha_w, beta_w, t_steps)
    flow = integrate_flow(problem, snapshot_every)
    pb = pullback_form(beta_w, flow.final)
    diff = pb - alpha_w
    by_degree = form_residual_by_degree(diff, d_work)
    certified = list(range(chart.degree))
    excluded = list(range(chart.degree, d_work + 1))
    max_res = max((by_degree[k] for k in certified), default=0.0)
    report = VerificationReport(
        max_residual=max_res, residual_by_degree=by_degree,
        certified_degrees=certified, excluded_degrees=excluded,
        t_steps=t_steps, working_degree=d_work)
    flow.checks["verification"] = report
    return flow, report


def flow_distance(f1: FlowJet, f2: FlowJet, chart: Chart) -> float:
    """sup coefficient distance between the final maps of two flows."""
    d = 0.0
    c1, c2 = f1.final, f2.final
    for v in chart.fiber_vars:
        e1 = c1.fiber_map.get(v, chart.jet_var(v))
        e2 = c2.fiber_map.get(v, chart.jet_var(v))
        d = max(d, (e1 - e2).sup_coeff())
    b1 = c1.base_shift if c1.base_shift is not None else chart.jet_zero()
    b2 = c2.base_shift if c2.base_shift is not None else chart.jet_zero()
    return max(d, (b1 - b2).sup_coeff())


# ---------------------------------------------------------------------------
# radial homotopy primitives
# ---------------------------------------------------------------------------

def _scale_by_degree(jet: JetPolynomial, weight) -> JetPolynomial:
    return JetPolynomial(jet.degree,
                         {m: s * weight(m.degree) for m, s in jet.terms.items()},
                         jet.window, jet.truncated)


def radial_primitive_2form(eta: Form) -> Form:
    """1-form zeta with d zeta = eta for a closed 2-form vanishing on the
    zero section, via the fiber-radial homotopy; vanishes to second order."""
    chart = eta.chart
    out: dict = {}

    def add(slot, jet):
        if not jet.is_zero():
            out[(slot,)] = out[(slot,)] + jet if (slot,) in out else jet

    for (a, b), c in eta.terms.items():
        if a < chart.m and b < chart.m:
            if c.sup_coeff() > 1e-14:
                raise StructuralError("base-base component obstructs the homotopy")
            continue
        if a < chart.m:
            vb = chart.jet_var(chart.slot_fiber_var(b))
            add(a, -(_scale_by_degree(c, lambda d: 1.0 / (d + 1)) * vb))
        else:
            va = chart.jet_var(chart.slot_fiber_var(a))
            vb = chart.jet_var(chart.slot_fiber_var(b))
            w = _scale_by_degree(c, lambda d: 1.0 / (d + 2))
            add(b, w * va)
            add(a, -(w * vb))
    return Form(chart, 1, out)


def radial_primitive_1form(delta: Form) -> JetPolynomial:
    """Function G with dG = delta for a closed 1-form vanishing on the zero
    section; the theta components are recovered by closedness."""
    chart = delta.chart
    g = chart.jet_zero()
    for (slot,), c in delta.terms.items():
        if slot < chart.m:
            continue
        v = chart.jet_var(chart.slot_fiber_var(slot))
        g = g + _scale_by_degree(c, lambda d: 1.0 / (d + 1)) * v
    return g


# ---------------------------------------------------------------------------
# second-order variant
# ---------------------------------------------------------------------------

def _restrict_to_slice(form: Form, sigma_chart: Chart, z_var: str) -> Form:
    """Pull back to {z = 0}: drop dz slots and z-monomials."""
    z_slot = form.chart.slot_index(z_var)
    out = {}
    for key, jet in form.terms.items():
        if z_slot in key:
            continue
        terms = {m: s for m, s in jet.terms.items() if m.get(z_var) == 0}
        if terms:
            out[key] = JetPolynomial(jet.degree, terms, jet.window, jet.truncated)
    return Form(sigma_chart, form.k, out)


def _extend_jet(jet: JetPolynomial, chart: Chart) -> JetPolynomial:
    return JetPolynomial(chart.degree, jet.terms, chart.window, jet.truncated)


def _hypothesis_check(alpha: Form, beta: Form, tol: float = TOL_ZERO_SECTION):
    rho = beta - alpha
    zs = max((j.zero_section().sup_coeff() for j in rho.terms.values()), default=0.0)
    if zs > tol:
        raise HypothesisViolation(
            f"alpha != beta on the zero section ({zs:.2e})")
    d_rho = exterior_derivative(rho)
    zs2 = max((j.zero_section().sup_coeff() for j in d_rho.terms.values()), default=0.0)
    if zs2 > tol:
        raise HypothesisViolation(
            f"d alpha != d beta on the zero section ({zs2:.2e})")
    return rho, d_rho


def _sigma_symplectic_stage(alpha, rho, chart, sigma_chart, t_steps):
    """Moser on the slice {z = 0}: flow carrying omega_0 to omega_1."""
    z_var = chart.z_var
    omega0 = _restrict_to_slice(exterior_derivative(alpha), sigma_chart, z_var)
    eta = _restrict_to_slice(exterior_derivative(rho), sigma_chart, z_var)
    if eta.sup_coeff() < 1e-15:
        return FlowJet(final=CoordinateChange.identity("sigma:id")), omega0, eta
    zeta = radial_primitive_2form(eta)
    d_check = (exterior_derivative(zeta) - eta).sup_coeff()
    if d_check > 1e-11:
        raise StructuralError(f"radial primitive residual {d_check:.2e} (bug)")
    samples = sigma_chart.model.sample_points()

    def field_at(t):
        omega_t = omega0 + eta * t
        dim = sigma_chart.dim
        rows = []
        for tgt in range(dim):
            row = [sigma_chart.jet_zero()] * dim
            for (a, b), w in omega_t.terms.items():
                if b == tgt:
                    row[a] = row[a] + w
                elif a == tgt:
                    row[b] = row[b] - w
            rows.append(row)
        rhs = [-zeta.coeff((s,)) for s in range(dim)]
        x, _ = solve_jet_linear(rows, rhs, samples=samples)
        w_field = VectorFieldJet(sigma_chart, dict(enumerate(x)))
        return _coordinate_components(w_field)

    flow = _flow_of_field(sigma_chart, field_at, t_steps, "sigma-stage")
    return flow, omega0, eta


def _reeb_extension(alpha: Form, beta: Form, phi_sigma: CoordinateChange,
                    chart: Chart, tol: float = TOL_SOLVE) -> CoordinateChange:
    """Extend a slice map to the chart by matching Reeb flow lines.

    Solves R0(psi_c) = R1^c o psi with psi = phi_sigma on {z = 0}; R0 is
    d/dz plus higher jets, so iterated z-integration converges within the
    truncation degree."""
    from .forms import reeb_field
    r0 = reeb_field(alpha, chart.n, check_contact=False)
    r1 = reeb_field(beta, chart.n, check_contact=False)
    c0 = _coordinate_components(r0)
    c1 = _coordinate_components(r1)
    z_var = chart.z_var
    e0 = c0[z_var]
    e0_inv = e0.invert_unit(samples=chart.model.sample_points())

    keys = ["__base__"] + list(chart.fiber_vars)
    init = {"__base__": _extend_jet(phi_sigma.base_shift, chart)
            if phi_sigma.base_shift is not None else chart.jet_zero()}
    for v in chart.fiber_vars:
        if v == z_var:
            init[v] = chart.jet_zero()
        else:
            e = phi_sigma.fiber_map.get(v)
            init[v] = _extend_jet(e, chart) if e is not None else chart.jet_var(v)

    def sideways(f):
        # R0(f) minus the e0 dz/dz part: base direction + non-z fibers
        acc = chart.jet_zero()
        if not c0["__base__"].is_zero():
            df = f.derivative_base()
            if not df.is_zero():
                acc = acc + c0["__base__"] * df
        for v in chart.fiber_vars:
            if v == z_var:
                continue
            cv = c0[v]
            if cv.is_zero():
                continue
            df = f.derivative_fiber(v)
            if not df.is_zero():
                acc = acc + cv * df
        return acc

    # fixed point of f_c = init_c + int_z e0^{-1} (rhs_c - S(f_c)) dz, where
    # rhs_c = R1^c o psi (minus the inhomogeneous base part for the shift)
    state = {k: init[k] for k in keys}
    state[z_var] = chart.jet_var(z_var)
    for _ in range(2 * (chart.degree + 2)):
        fiber_map = {v: state[v] for v in chart.fiber_vars}
        shift = state["__base__"]
        new_state = {}
        for k in keys:
            rhs = c1[k].substitute(fiber_map, shift)
            if k == "__base__":
                rhs = rhs - c0["__base__"]
            integrand = (rhs - sideways(state[k])) * e0_inv
            new_state[k] = init[k] + integrand.antiderivative_fiber(z_var)
        change = max((new_state[k] - state[k]).sup_coeff() for k in keys)
        state = new_state
        if change < 1e-15:
            break
    fiber_map = {v: state[v] for v in chart.fiber_vars}
    shift = state["__base__"]
    worst = 0.0
    for k in keys:
        rhs = c1[k].substitute(fiber_map, shift)
        if k == "__base__":
            rhs = rhs - c0["__base__"]
        lhs = sideways(state[k]) + e0 * state[k].derivative_fiber(z_var)
        worst = max(worst, (lhs - rhs).up_to_degree(chart.degree - 1).sup_coeff())
    if worst > max(tol, 1e-10):
        raise StructuralError(f"Reeb extension residual {worst:.2e}")
    return CoordinateChange(fiber_map, label="reeb-extension", base_shift=shift)


def tangent_normalize(alpha: Form, beta: Form, t_steps: int = DEFAULT_T_STEPS,
                      degree_margin: int = DEGREE_MARGIN) -> FlowJet:
    """Normalization with identity linearization on the zero section.

    Requires alpha = beta and d alpha = d beta along the zero section.  The
    returned flow's final change psi satisfies psi^* beta = alpha with both
    the map and its differential fixing the zero section."""
    chart0 = alpha.chart
    chart = chart0.with_degree(chart0.degree + degree_margin)
    alpha = lift_form(alpha, chart)
    beta = lift_form(beta, chart)
    rho, d_rho = _hypothesis_check(alpha, beta)
    sigma_chart = chart.with_fiber_vars(chart.fiber_vars[:-1])

    flow_sigma, omega0, eta = _sigma_symplectic_stage(
        alpha, rho, chart, sigma_chart, t_steps)
    psi = _reeb_extension(alpha, beta, flow_sigma.final, chart)

    from .forms import reeb_field

    beta1 = pullback_form(beta, psi)
    delta = beta1 - alpha
    d_delta = exterior_derivative(delta)
    d_delta_res = max(form_residual_by_degree(d_delta, chart.degree - 1).values(),
                      default=0.0)
    g = radial_primitive_1form(delta)
    g_res = max(form_residual_by_degree(
        _differential_as_form(chart, g) - delta, chart.degree - 1).values(),
        default=0.0)

    def field_at(t):
        theta_t = reeb_field(alpha + delta * t, chart.n, check_contact=False)
        return _coordinate_components(theta_t * (-g))

    flow2 = _flow_of_field(chart, field_at, t_steps, "exact-stage")
    total = psi.compose(flow2.final)

    pb = pullback_form(beta, total)
    diff = pb - alpha
    by_degree = form_residual_by_degree(diff, chart.degree)
    certified = list(range(chart0.degree))
    max_res = max((by_degree[k] for k in certified), default=0.0)

    # linearization on the zero section must be the identity
    lin_dev = 0.0
    for v in chart.fiber_vars:
        expr = total.fiber_map.get(v, chart.jet_var(v)) - chart.jet_var(v)
        lin_dev = max(lin_dev, expr.part_of_degree(1).sup_coeff(),
                      expr.part_of_degree(0).sup_coeff())
    if total.base_shift is not None:
        lin_dev = max(lin_dev, total.base_shift.part_of_degree(1).sup_coeff())

    report = VerificationReport(
        max_residual=max_res, residual_by_degree=by_degree,
        certified_degrees=certified,
        excluded_degrees=list(range(chart0.degree, chart.degree + 1)),
        t_steps=t_steps, working_degree=chart.degree)
    return FlowJet(final=total, snapshots=[],
                   checks={"verification": report,
                           "linearization_identity": lin_dev,
                           "d_delta_residual": d_delta_res,
                           "primitive_residual": g_res,
                           "sigma_stage": flow_sigma.checks})
