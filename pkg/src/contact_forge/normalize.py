"""Staged reduction of a contact jet along the zero section to Darboux form.

Pipeline (all changes fix the base and the zero section):

  1. linear stage: rotate the contact plane so the form restricts to
     d zeta_1 on the zero section (frame completion of the coefficient row),
     after which zeta_1 plays the role of z;
  2. divide by the unit d z coefficient (a conformal rescaling, logged as
     the ``divisor``, not a coordinate change);
  3. one frame-completion stage turning every theta_i coefficient into
     -y_i at first order;
  4. n - m pair stages: a shear of z removes the working variable from the
     later differentials, a frame completion turns its own differential's
     coefficient into minus the next variable, fixing an (x_i, y_i) pair.

What remains after the staged changes splits into the Darboux normal part
plus a remainder confined to the ignorable ideal: every remainder term
either (a) carries the z variable in its coefficient, (b) is a diagonal
zeta_j d zeta_j term, (c) has coefficient of fiber degree >= 2 in the
non-z variables, or (d) lives on an assigned dy_j slot or carries an
assigned y variable.  Such terms do not contribute to the top form along
the zero section, which is the soundness oracle verified in the tests.

Every discarded term is logged with its clause; the composed change log,
divisor, normal part and remainder reproduce the input form exactly up to
jet truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charts import Chart, darboux_chart
from .coords import CoordinateChange, compose_all
from .errors import (ContactViolation, NotIsotropic, RankDeficient,
                     StructuralError)
from .forms import Form, normal_contact_form, pullback_form
from .frame import FunctionMatrix, frame_complete
from .series import FiberMonomial, JetPolynomial, Series

TOL_ISOTROPIC = 1e-12
TOL_DUST = 1e-11
TOL_ROUNDTRIP = 1e-11


@dataclass(frozen=True)
class ReductionStage:
    """Role bookkeeping during the staged reduction."""
    z_var: str
    y_roles: tuple = ()            # zeta names carrying y_1, y_2, ... so far
    x_roles: tuple = ()            # zeta names carrying x_{m+1}, ...
    stage: int = 0

    def pair(self, x_var, y_var) -> "ReductionStage":
        return ReductionStage(self.z_var, self.y_roles + (y_var,),
                              self.x_roles + (x_var,), self.stage + 1)

    def with_y(self, y_vars) -> "ReductionStage":
        return ReductionStage(self.z_var, self.y_roles + tuple(y_vars),
                              self.x_roles, self.stage + 1)


@dataclass
class DecomposedForm:
    chart: Chart                   # darboux chart of the output
    normal_part: Form
    remainder: Form
    change_log: list
    divisor: JetPolynomial         # unit divided out, in final coordinates
    role_map: dict                 # zeta name -> darboux name
    remainder_log: list            # (slot_label, monomial, clause)
    certificates: dict
    stage_count: int


# ---------------------------------------------------------------------------
# ignorable-ideal membership
# ---------------------------------------------------------------------------

def classify_term(chart: Chart, slot: int, mono: FiberMonomial,
                  stage: ReductionStage) -> str:
    """Clause of the ignorable ideal admitting the term, or its status.

    Returns one of 'a', 'b', 'c', 'd', 'keep', 'pending'."""
    z = stage.z_var
    if mono.get(z) >= 1:
        return "a"
    var = chart.slot_fiber_var(slot)
    if var == z:
        return "keep" if mono.degree == 0 else "pending"
    # normal-form terms: -y_i theta_i and -y_{m+i} dx_{m+i}
    if slot < chart.m:
        if slot < len(stage.y_roles) and mono == FiberMonomial({stage.y_roles[slot]: 1}):
            return "keep"
    elif var in stage.x_roles:
        i = stage.x_roles.index(var)
        if chart.m + i < len(stage.y_roles) and \
           mono == FiberMonomial({stage.y_roles[chart.m + i]: 1}):
            return "keep"
    if var is not None and mono == FiberMonomial({var: 1}):
        return "b"
    if mono.degree >= 2:
        return "c"
    if var in stage.y_roles or any(mono.get(y) >= 1 for y in stage.y_roles):
        return "d"
    return "pending"


def ideal_membership(term: Form, stage: ReductionStage):
    """Clause (a)-(d) admitting a single-term 1-form, or 'reject'.

    'reject' means the reduction must consume the term; encountering one
    after the final stage is an internal error."""
    if term.k != 1 or sum(len(j.terms) for j in term.terms.values()) != 1:
        raise StructuralError("ideal_membership expects a single-term 1-form")
    ((key, jet),) = term.terms.items()
    ((mono, _),) = jet.terms.items()
    clause = classify_term(term.chart, key[0], mono, stage)
    return clause if clause in ("a", "b", "c", "d") else "reject"


def _split_by_ideal(beta: Form, stage: ReductionStage, dust_tol: float = TOL_DUST):
    """Partition into (core, remainder, log, pending_sup)."""
    chart = beta.chart
    core: dict = {}
    rem: dict = {}
    log = []
    pending_sup = 0.0
    for key, jet in beta.terms.items():
        slot = key[0]
        keep_terms, rem_terms = {}, {}
        for mono, s in jet.terms.items():
            clause = classify_term(chart, slot, mono, stage)
            if clause == "keep":
                keep_terms[mono] = s
            elif clause == "pending":
                if s.sup_coeff() <= dust_tol:
                    log.append((chart.slots[slot], repr(mono), "dust"))
                    continue
                pending_sup = max(pending_sup, s.sup_coeff())
                keep_terms[mono] = s
            else:
                rem_terms[mono] = s
                log.append((chart.slots[slot], repr(mono), clause))
        if keep_terms:
            core[key] = JetPolynomial(jet.degree, keep_terms, jet.window, jet.truncated)
        if rem_terms:
            rem[key] = JetPolynomial(jet.degree, rem_terms, jet.window, jet.truncated)
    return (Form(chart, 1, core), Form(chart, 1, rem), log, pending_sup)


# ---------------------------------------------------------------------------
# renaming between charts
# ---------------------------------------------------------------------------

def rename_jet(jet: JetPolynomial, mapping: dict) -> JetPolynomial:
    terms = {FiberMonomial({mapping.get(v, v): e for v, e in m.exponents.items()}): s
             for m, s in jet.terms.items()}
    return JetPolynomial(jet.degree, terms, jet.window, jet.truncated)


def rename_form(form: Form, new_chart: Chart, mapping: dict) -> Form:
    out = {}
    for key, jet in form.terms.items():
        new_key = []
        for slot in key:
            var = form.chart.slot_fiber_var(slot)
            if var is None:
                new_key.append(slot)
            else:
                new_key.append(new_chart.slot_index(mapping.get(var, var)))
        out[tuple(new_key)] = rename_jet(jet, mapping)
    return Form(new_chart, form.k, out)


# ---------------------------------------------------------------------------
# stage 1: rotate the contact plane to d zeta_1
# ---------------------------------------------------------------------------

def _zero_section_row(beta: Form):
    chart = beta.chart
    return [beta.coeff((chart.m + i,)).zero_section()
            for i in range(len(chart.fiber_vars))]


def normalize_linear_part(beta: Form, model=None):
    """Fiber-linear change making beta restrict to d zeta_1 on the zero
    section, via frame completion of the coefficient row.

    Returns (change, transformed form).  Requires the zero section to be
    isotropic: no theta component may survive there."""
    chart = beta.chart
    model = model or chart.model
    for j in range(chart.m):
        sup = beta.coeff((j,)).zero_section().sup_coeff()
        if sup > TOL_ISOTROPIC:
            raise NotIsotropic(
                f"theta_{j + 1} coefficient is {sup:.2e} on the zero section")
    row = _zero_section_row(beta)
    want = [Series.constant(1.0)] + [Series.zero()] * (len(row) - 1)
    if all((r - w).sup_coeff() <= 1e-14 for r, w in zip(row, want)):
        return CoordinateChange.identity("linear-part:id"), beta
    try:
        A = FunctionMatrix([row], model)
    except RankDeficient as e:
        raise RankDeficient(
            f"coefficient row has a common zero (contradicts contact): {e}",
            witness=e.witness) from e
    B = frame_complete(A, mode="auto")
    change = CoordinateChange.linear(chart.fiber_vars, chart.fiber_vars,
                                     B.entries, chart, label="linear-part")
    out = pullback_form(beta, change)
    new_row = _zero_section_row(out)
    resid = max((r - w).sup_coeff() for r, w in zip(new_row, want))
    if resid > 1e-9:
        raise StructuralError(f"linear stage residual {resid:.2e} (bug)")
    return change, out


# ---------------------------------------------------------------------------
# staged Taylor reduction
# ---------------------------------------------------------------------------

def _degree_one_matrix(beta: Form, slots, variables):
    """Series matrix of degree-1 coefficients: rows = slots, cols = vars."""
    return [[beta.coeff((s,)).coeff(FiberMonomial({v: 1}))
             for v in variables] for s in slots]


def _completion_change(beta, matrix_rows, variables, chart, model, label):
    """Frame-complete the rows and return the change sending the degree-1
    block to (-I, 0) over ``variables``; square blocks are inverted."""
    from .errors import NotAUnit
    from .linsolve import invert_series_matrix
    m = len(matrix_rows)
    try:
        A = FunctionMatrix(matrix_rows, model)
        if m == len(variables):
            entries = invert_series_matrix(A.entries, chart.degree, chart.window)
        else:
            entries = frame_complete(A, mode="auto").entries
    except (RankDeficient, NotAUnit) as e:
        raise ContactViolation(
            f"rank drop during {label} (contradicts contact): {e}",
            witness=getattr(e, "witness", None)) from e
    entries = [[(-row[c] if c < m else row[c]) for c in range(len(row))]
               for row in entries]
    return CoordinateChange.linear(variables, variables, entries, chart,
                                   label=label)


def reduce_taylor(beta: Form, model=None, frame_mode: str = "auto") -> DecomposedForm:
    """Reduce a contact jet (linear part already normalized) to the Darboux
    normal form plus an ignorable-ideal remainder.

    Performs the unit division, the theta-block frame completion and n - m
    shear plus completion pair stages, logging every change and discard."""
    chart = beta.chart
    model = model or chart.model
    n, m = chart.n, chart.m
    fiber = chart.fiber_vars
    z_var = fiber[0]

    row = _zero_section_row(beta)
    want = [Series.constant(1.0)] + [Series.zero()] * (len(row) - 1)
    if max((r - w).sup_coeff() for r, w in zip(row, want)) > 1e-9:
        raise StructuralError("apply normalize_linear_part before reduce_taylor")

    samples = model.sample_points()
    changes: list = []
    stage = ReductionStage(z_var=z_var)

    # conformal division by the unit dz coefficient
    divisor = beta.coeff((chart.slot_index(z_var),))
    beta = beta * divisor.invert_unit(samples=samples)

    def push_change(change):
        nonlocal beta, divisor
        changes.append(change)
        beta = pullback_form(beta, change)
        divisor = change.apply(divisor)

    # theta block: coefficients sum_j a_ij zeta_j theta_i -> -y_i theta_i
    active = [v for v in fiber if v != z_var]
    theta_rows = _degree_one_matrix(beta, range(m), active)
    nontrivial = any(not s.is_zero() for r in theta_rows for s in r)
    if not nontrivial:
        raise ContactViolation("theta coefficients vanish identically at first order")
    push_change(_completion_change(beta, theta_rows, active, chart, model,
                                   f"theta-block({m}x{len(active)})"))
    stage = stage.with_y(active[:m])
    completions = 1

    # pair stages on the remaining variables
    remaining = active[m:]
    for s_idx in range(n - m):
        w = remaining[0]
        rest = remaining[1:]
        w_slot = chart.slot_index(w)
        # shear: remove w from the later differentials' coefficients
        shear_q = chart.jet_zero()
        for v in rest:
            c = beta.coeff((chart.slot_index(v),)).coeff(FiberMonomial({w: 1}))
            if not c.is_zero():
                shear_q = shear_q - (chart.jet_var(w) * chart.jet_var(v)).scale_series(c)
        if not shear_q.is_zero():
            push_change(CoordinateChange.shear(z_var, shear_q,
                                               label=f"shear({w})"))
        # completion: dw coefficient -> -(next variable)
        dw_row = _degree_one_matrix(beta, [w_slot], rest)
        push_change(_completion_change(beta, dw_row, rest, chart, model,
                                       f"pair-block({w})"))
        completions += 1
        stage = stage.pair(w, rest[0])
        remaining = rest[1:]

    core, remainder, log, pending = _split_by_ideal(beta, stage)
    if pending > TOL_DUST:
        raise StructuralError(
            f"unconsumed term of size {pending:.2e} after the final stage (bug)")

    # present the result on the darboux chart
    role_map = {z_var: "z"}
    for i, v in enumerate(stage.y_roles):
        role_map[v] = f"y{i + 1}"
    for i, v in enumerate(stage.x_roles):
        role_map[v] = f"x{m + 1 + i}"
    out_chart = darboux_chart(model, n, chart.degree, chart.window)
    normal = rename_form(core, out_chart, role_map)
    remainder_out = rename_form(remainder, out_chart, role_map)
    divisor_out = rename_jet(divisor, role_map)

    target = normal_contact_form(out_chart)
    normal_resid = (normal - target).sup_coeff()
    certificates = {
        "normal_residual": normal_resid,
        "stage_count": completions,
        "n": n, "m": m,
        "truncated": beta.truncated(),
    }
    return DecomposedForm(
        chart=out_chart, normal_part=normal, remainder=remainder_out,
        change_log=changes, divisor=divisor_out, role_map=role_map,
        remainder_log=log, certificates=certificates, stage_count=completions)


def darboux_reduce(beta: Form, model=None, frame_mode: str = "auto"):
    """Full pipeline: linear stage plus reduce_taylor.

    Returns the DecomposedForm with the linear change prepended and the
    round-trip residual certified."""
    model = model or beta.chart.model
    lin_change, beta1 = normalize_linear_part(beta, model)
    dec = reduce_taylor(beta1, model, frame_mode)
    dec.change_log.insert(0, lin_change)
    dec.certificates["roundtrip_residual"] = roundtrip_residual(beta, dec)
    return dec


def roundtrip_residual(beta_original: Form, dec: DecomposedForm) -> float:
    """sup |pullback(beta, composed changes) - divisor (normal + remainder)|.

    Computed in the output chart by renaming the composed pullback."""
    composed = compose_all(dec.change_log)
    lhs = pullback_form(beta_original, composed)
    lhs = rename_form(lhs, dec.chart, dec.role_map)
    rhs = (dec.normal_part + dec.remainder) * dec.divisor
    return (lhs - rhs).sup_coeff()
