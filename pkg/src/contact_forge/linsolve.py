"""Linear solves over the truncated jet ring.

Gauss-Jordan elimination where a pivot must be a ring unit: a jet whose
zero-section series is invertible (monomials and nonvanishing Taylor units).
Unit pivots exist for all the systems the kernel produces from certified
contact forms; their absence signals a degenerate input and is reported to
the caller, which converts it into the appropriate domain error.
"""

from __future__ import annotations

from .errors import NotAUnit, StructuralError
from .series import JetPolynomial, Series


def _pivot_score(jet: JetPolynomial):
    s = jet.zero_section()
    if s.is_zero():
        return None
    # prefer exact monomial pivots, then large leading magnitude
    return (0 if s.coeffs.size == 1 else 1, -s.sup_coeff())


def solve_jet_linear(matrix, rhs, samples=None):
    """Solve M x = b over the jet ring; rows may exceed columns.

    ``matrix`` is a list of rows of JetPolynomial, ``rhs`` a list of jets of
    the same length.  Extra rows must be consistent; their post-elimination
    residual jets are returned alongside the solution so callers can certify
    at the fiber degrees they trust (top-slice defects from upstream
    truncation are expected and excluded there).

    Returns (x, leftover_jets)."""
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if n_rows else 0
    if any(len(r) != n_cols for r in matrix) or len(rhs) != n_rows:
        raise StructuralError("ragged linear system")
    if n_rows < n_cols:
        raise StructuralError("underdetermined jet system")
    M = [list(row) for row in matrix]
    b = list(rhs)
    pivot_of_col = {}
    free_rows = list(range(n_rows))
    for j in range(n_cols):
        best, best_score = None, None
        for i in free_rows:
            score = _pivot_score(M[i][j])
            if score is not None and (best_score is None or score < best_score):
                best, best_score = i, score
        if best is None:
            raise NotAUnit(f"no unit pivot available in column {j}")
        try:
            inv = M[best][j].invert_unit(samples=samples)
        except NotAUnit:
            raise NotAUnit(f"pivot in column {j} is not invertible") from None
        M[best] = [inv * e for e in M[best]]
        b[best] = inv * b[best]
        for i in range(n_rows):
            if i == best:
                continue
            f = M[i][j]
            if f.is_zero():
                continue
            M[i] = [e - f * p for e, p in zip(M[i], M[best])]
            b[i] = b[i] - f * b[best]
        pivot_of_col[j] = best
        free_rows.remove(best)
    x = [b[pivot_of_col[j]] for j in range(n_cols)]
    leftovers = [b[i] for i in free_rows]
    return x, leftovers


def invert_series_matrix(entries, degree: int, window) -> list:
    """Inverse of a square matrix of Series over the truncated Laurent ring."""
    k = len(entries)
    jets = [[JetPolynomial.from_series(s, degree, window) if isinstance(s, Series)
             else JetPolynomial.constant(s, degree, window) for s in row]
            for row in entries]
    cols = []
    for j in range(k):
        rhs = [JetPolynomial.constant(1.0 if i == j else 0.0, degree, window)
               for i in range(k)]
        x, _ = solve_jet_linear(jets, rhs)
        cols.append([xi.zero_section() for xi in x])
    return [[cols[j][i] for j in range(k)] for i in range(k)]
