"""Completion of full-rank function matrices to invertible square ones.

Given a holomorphic m x p matrix A of maximal rank m at every point of the
base model, produce B in GL_p with A B = (I_m, 0).

Exact mode runs a column Hermite reduction by the extended Euclidean
algorithm over Laurent polynomials in one variable with Gaussian-rational
coefficients.  On models containing the origin the algorithm works in C[u]
(units: nonzero constants); on annular models it works in C[u, 1/u] (units:
monomials).  The reduction yields A U = (L, 0) with L lower triangular; the
pivot product det L generates the gcd of the maximal minors, so rank
everywhere is equivalent to every pivot being a ring unit, and then
B = U diag(L^{-1}, I) is exact with monomial determinant.

Numeric mode solves for B directly in Laurent-coefficient space: min-norm
least squares subject to interpolation of A(u) B(u) = (I, 0) on circle
grids, with kernel columns anchored to an orthonormal kernel basis at the
basepoint so they cannot collapse.  Residual and determinant certificates
are sampled a posteriori.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ExactModeUnavailable, RankDeficient, StructuralError
from .series import Series
from .surfaces import SurfaceModel

TOL_RANK = 1e-9
TOL_NUMERIC = 1e-10
TOL_DET = 1e-8
_RATIONALIZE_DEN = 1 << 24
_RATIONALIZE_TOL = 1e-12


# ---------------------------------------------------------------------------
# exact scalars and Laurent polynomials
# ---------------------------------------------------------------------------

class QQi:
    """Gaussian rational a + b i with Fraction components."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def from_complex(c: complex):
        re = Fraction(float(np.real(c))).limit_denominator(_RATIONALIZE_DEN)
        im = Fraction(float(np.imag(c))).limit_denominator(_RATIONALIZE_DEN)
        if abs(float(re) - np.real(c)) > _RATIONALIZE_TOL or \
           abs(float(im) - np.imag(c)) > _RATIONALIZE_TOL:
            raise ExactModeUnavailable(
                f"coefficient {c!r} is not an exact small rational; use numeric mode")
        return QQi(re, im)

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __add__(self, o):
        return QQi(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return QQi(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __mul__(self, o):
        return QQi(self.re * o.re - self.im * o.im,
                   self.re * o.im + self.im * o.re)

    def __truediv__(self, o):
        d = o.re * o.re + o.im * o.im
        if not d:
            raise ZeroDivisionError("division by exact zero")
        return QQi((self.re * o.re + self.im * o.im) / d,
                   (self.im * o.re - self.re * o.im) / d)

    def __eq__(self, o):
        return isinstance(o, QQi) and self.re == o.re and self.im == o.im

    def __repr__(self):
        return f"({self.re}{'+' if self.im >= 0 else ''}{self.im}i)"


class LPoly:
    """Sparse exact Laurent polynomial: {exponent: QQi}."""

    __slots__ = ("c",)

    def __init__(self, c=None):
        self.c = {k: v for k, v in (c or {}).items() if v}

    @staticmethod
    def from_series(s: Series) -> "LPoly":
        return LPoly({k: QQi.from_complex(s.coeff(k))
                      for k in range(s.k_min, s.k_max + 1)} if not s.is_zero() else {})

    @staticmethod
    def const(v) -> "LPoly":
        return LPoly({0: QQi(v)}) if v else LPoly()

    def to_series(self, var="u") -> Series:
        if not self.c:
            return Series.zero(var)
        lo, hi = min(self.c), max(self.c)
        coeffs = [self.c.get(k, QQi()).to_complex() for k in range(lo, hi + 1)]
        return Series(var, lo, coeffs)

    def is_zero(self):
        return not self.c

    @property
    def val(self):
        return min(self.c) if self.c else 0

    @property
    def deg(self):
        return max(self.c) if self.c else 0

    @property
    def span(self):
        return self.deg - self.val if self.c else -1

    def __add__(self, o):
        out = dict(self.c)
        for k, v in o.c.items():
            w = out.get(k)
            out[k] = v + w if w is not None else v
        return LPoly(out)

    def __neg__(self):
        return LPoly({k: -v for k, v in self.c.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        out: dict = {}
        for k1, v1 in self.c.items():
            for k2, v2 in o.c.items():
                k = k1 + k2
                p = v1 * v2
                w = out.get(k)
                out[k] = p + w if w is not None else p
        return LPoly(out)

    def shift(self, k: int) -> "LPoly":
        return LPoly({e + k: v for e, v in self.c.items()})

    def is_monomial(self):
        return len(self.c) == 1

    def is_constant(self):
        return not self.c or (len(self.c) == 1 and 0 in self.c)

    def __repr__(self):
        return "LPoly(" + " + ".join(f"{v!r}*u^{k}" for k, v in sorted(self.c.items())) + ")"


def _divmod_poly(a: LPoly, b: LPoly):
    """Ordinary polynomial division by leading terms; requires val >= 0."""
    if b.is_zero():
        raise ZeroDivisionError
    q: dict = {}
    r = LPoly(dict(a.c))
    db, lb = b.deg, b.c[b.deg]
    while not r.is_zero() and r.deg >= db:
        k = r.deg - db
        f = r.c[r.deg] / lb
        q[k] = q.get(k, QQi()) + f
        r = r - b.shift(k) * LPoly({0: f})
    return LPoly(q), r


def _divmod_span(a: LPoly, b: LPoly):
    """Euclidean division in C[u, 1/u] with the span as size function."""
    if b.is_zero():
        raise ZeroDivisionError
    va, vb = a.val, b.val
    qh, rh = _divmod_poly(a.shift(-va), b.shift(-vb))
    return qh.shift(va - vb), rh.shift(va)


# ---------------------------------------------------------------------------
# function matrices
# ---------------------------------------------------------------------------

@dataclass
class CompletionCertificate:
    mode: str
    residual: float          # sup |A B - (I, 0)| over verification samples
    exact_zero: bool
    det_token: str           # exact det description or sampled min |det|
    det_min: float
    window: tuple | None = None

    def as_dict(self):
        return {"mode": self.mode, "residual": self.residual,
                "exact_zero": self.exact_zero, "det_token": self.det_token,
                "det_min": self.det_min,
                "window": list(self.window) if self.window else None}


class FunctionMatrix:
    """Matrix of holomorphic functions on the base, entries as Series."""

    def __init__(self, entries, model: SurfaceModel | None = None,
                 check_rank: bool = True, tol_rank: float = TOL_RANK):
        self.entries = [[e if isinstance(e, Series) else Series.constant(e)
                         for e in row] for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.rows else 0
        if any(len(r) != self.cols for r in self.entries):
            raise StructuralError("ragged matrix")
        self.model = model or SurfaceModel.annulus(0.5, 2.0)
        self.certificate: CompletionCertificate | None = None
        if check_rank:
            self.check_rank(tol_rank)

    def at(self, u) -> np.ndarray:
        return np.array([[e(u) for e in row] for row in self.entries], dtype=complex)

    def at_many(self, pts: np.ndarray) -> np.ndarray:
        """Shape (len(pts), rows, cols)."""
        pts = np.asarray(pts, dtype=complex)
        out = np.empty((len(pts), self.rows, self.cols), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                out[:, i, j] = e(pts)
        return out

    def check_rank(self, tol: float = TOL_RANK):
        pts = self.model.sample_points(n_per_circle=64, k_circles=1) \
            if self.rows and self.cols else []
        mats = self.at_many(pts)
        sv = np.linalg.svd(mats, compute_uv=False)
        smin = sv[:, min(self.rows, self.cols) - 1]
        bad = smin <= tol
        if np.any(bad):
            raise RankDeficient(
                f"rank drops to < {self.rows} (min singular value "
                f"{smin[bad][0]:.2e})", witness=complex(pts[bad][0]))
    def __repr__(self):
        return f"FunctionMatrix({self.rows}x{self.cols})"


# ---------------------------------------------------------------------------
# exact completion
# ---------------------------------------------------------------------------

def _exact_completion(A: FunctionMatrix, ring: str):
    m, p = A.rows, A.cols
    ent = [[LPoly.from_series(e) for e in row] for row in A.entries]
    if ring == "poly":
        for row in ent:
            for e in row:
                if not e.is_zero() and e.val < 0:
                    raise StructuralError(
                        "negative Laurent exponents on a simply connected model")
    divmod_fn = _divmod_poly if ring == "poly" else _divmod_span
    size = (lambda e: e.deg) if ring == "poly" else (lambda e: e.span)

    # column operations on A, accumulated in U
    U = [[LPoly.const(1 if i == j else 0) for j in range(p)] for i in range(p)]
    det_sign = QQi(1)

    def colswap(j1, j2):
        nonlocal det_sign
        if j1 == j2:
            return
        for r in ent:
            r[j1], r[j2] = r[j2], r[j1]
        for r in U:
            r[j1], r[j2] = r[j2], r[j1]
        det_sign = -det_sign

    def coladd(jdst, jsrc, q: LPoly):
        # col_jdst -= q * col_jsrc
        for r in ent:
            r[jdst] = r[jdst] - q * r[jsrc]
        for r in U:
            r[jdst] = r[jdst] - q * r[jsrc]

    for i in range(m):
        while True:
            nz = [j for j in range(i, p) if not ent[i][j].is_zero()]
            if not nz:
                raise RankDeficient(f"row {i + 1} reduced to zero: rank < {m}")
            piv = min(nz, key=lambda j: (size(ent[i][j]), j))
            colswap(i, piv)
            done = True
            for j in range(i + 1, p):
                if ent[i][j].is_zero():
                    continue
                q, _ = divmod_fn(ent[i][j], ent[i][i])
                coladd(j, i, q)
                if not ent[i][j].is_zero():
                    done = False
            if done:
                break

    # pivots must be ring units
    for i in range(m):
        g = ent[i][i]
        unit = g.is_constant() if ring == "poly" else g.is_monomial()
        if not unit:
            root = _root_in_domain(g, A.model)
            if root is not None:
                raise RankDeficient(
                    f"pivot {i + 1} vanishes inside the domain", witness=root)
            raise ExactModeUnavailable(
                "pivot is a non-polynomial unit on this domain; use numeric mode")

    # B = U * diag(L^{-1}, I); L = leading m x m block of A U, lower triangular
    L = [[ent[i][j] for j in range(m)] for i in range(m)]
    Linv = [[LPoly() for _ in range(m)] for _ in range(m)]
    for i in range(m):
        gi = L[i][i]
        inv_gi = LPoly({-gi.val: QQi(1) / gi.c[gi.val]})
        Linv[i][i] = inv_gi
        for j in range(i - 1, -1, -1):
            acc = LPoly()
            for k in range(j, i):
                acc = acc + L[i][k] * Linv[k][j]
            Linv[i][j] = -(inv_gi * acc) if not acc.is_zero() else LPoly()
    B = [[LPoly() for _ in range(p)] for _ in range(p)]
    for r in range(p):
        for c in range(p):
            if c < m:
                acc = LPoly()
                for k in range(m):
                    acc = acc + U[r][k] * Linv[k][c]
                B[r][c] = acc
            else:
                B[r][c] = U[r][c]

    # exact residual check: A B == (I, 0)
    A0 = [[LPoly.from_series(e) for e in row] for row in A.entries]
    for i in range(m):
        for j in range(p):
            acc = LPoly()
            for k in range(p):
                acc = acc + A0[i][k] * B[k][j]
            want = LPoly.const(1) if i == j else LPoly()
            if not (acc - want).is_zero():
                raise StructuralError("exact completion residual is nonzero (bug)")

    # det B = det_sign / prod(pivots): an exact monomial
    det_num, det_k = QQi(1), 0
    for i in range(m):
        g = ent[i][i]
        det_num = det_num * g.c[g.val]
        det_k += g.val
    det_c = det_sign / det_num
    det_token = f"{det_c.to_complex():.6g} * u^{-det_k}"
    var = A.model.var
    entries = [[B[r][c].to_series(var) for c in range(p)] for r in range(p)]
    out = FunctionMatrix(entries, A.model, check_rank=False)
    out.certificate = CompletionCertificate(
        mode="exact", residual=0.0, exact_zero=True,
        det_token=det_token, det_min=abs(det_c.to_complex()))
    return out


def _root_in_domain(g: LPoly, model: SurfaceModel):
    gg = g.shift(-g.val)
    coeffs = [gg.c.get(k, QQi()).to_complex() for k in range(gg.deg, -1, -1)]
    roots = np.roots(coeffs) if len(coeffs) > 1 else np.array([])
    for r in roots:
        if bool(np.all(model.contains(r))):
            return complex(r)
    return None


# ---------------------------------------------------------------------------
# numeric completion
# ---------------------------------------------------------------------------

def _numeric_completion(A: FunctionMatrix, window=(-8, 8), tol=TOL_NUMERIC,
                        rng=None, _retry=True):
    model, m, p = A.model, A.rows, A.cols
    if model.kind in ("disc", "plane", "polydisc"):
        window = (0, window[1])
    ks = np.arange(window[0], window[1] + 1)
    pts = model.sample_points(n_per_circle=48, k_circles=3)
    Avals = A.at_many(pts)                      # (S, m, p)
    vander = pts[:, None] ** ks[None, :]        # (S, W)
    n_unknown = p * len(ks)

    # rows of the interpolation system: for sample s and A-row i,
    # sum_{l,k} A[s,i,l] u_s^k c_{l,k} = target[s,i]
    design = np.einsum("sil,sk->silk", Avals, vander).reshape(len(pts), m, n_unknown)
    design = design.reshape(len(pts) * m, n_unknown)

    u0 = complex(model.basepoint)
    A0 = A.at(u0)
    _, _, vh = np.linalg.svd(A0)
    kernel0 = vh[m:, :].conj()                  # rows: orthonormal kernel basis at u0
    if rng is not None:
        q, _ = np.linalg.qr(rng.standard_normal((p - m, p - m))
                            + 1j * rng.standard_normal((p - m, p - m)))
        kernel0 = q @ kernel0
    anchor = (u0 ** ks)                         # (W,)

    cols = []
    for j in range(p):
        if j < m:
            target = np.zeros((len(pts), m), dtype=complex)
            target[:, j] = 1.0
            rows, rhs = design, target.reshape(-1)
        else:
            # kernel column anchored at u0
            anchor_rows = np.zeros((p, n_unknown), dtype=complex)
            for l in range(p):
                anchor_rows[l, l * len(ks):(l + 1) * len(ks)] = anchor
            rows = np.vstack([design, anchor_rows])
            rhs = np.concatenate([np.zeros(len(pts) * m, dtype=complex),
                                  kernel0[j - m, :]])
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        cols.append(sol.reshape(p, len(ks)))

    var = model.var
    entries = [[Series(var, int(ks[0]), cols[c][r]) for c in range(p)]
               for r in range(p)]
    B = FunctionMatrix(entries, model, check_rank=False)

    # verification on an offset sample set
    vpts = model.sample_points(n_per_circle=37, k_circles=3) * np.exp(0.05j)
    Av = A.at_many(vpts)
    Bv = B.at_many(vpts)
    prod = Av @ Bv
    want = np.zeros_like(prod)
    want[:, :m, :m] = np.eye(m)
    residual = float(np.max(np.abs(prod - want)))
    dets = np.abs(np.linalg.det(Bv))
    det_min = float(dets.min())
    if (residual > tol or det_min <= TOL_DET) and _retry:
        wider = (window[0] - 4 if window[0] < 0 else 0, window[1] + 4)
        rng2 = np.random.default_rng(7) if rng is None else rng
        return _numeric_completion(A, wider, tol, rng=rng2, _retry=False)
    if residual > tol:
        raise RankDeficient(
            f"numeric completion residual {residual:.2e} exceeds {tol:.1e}")
    if det_min <= TOL_DET:
        raise RankDeficient(f"completed matrix nearly singular: |det| = {det_min:.2e}")
    B.certificate = CompletionCertificate(
        mode="numeric", residual=residual, exact_zero=False,
        det_token=f"min sampled |det| = {det_min:.3e}", det_min=det_min,
        window=window)
    return B


def frame_complete(A: FunctionMatrix, mode: str = "auto",
                   window=(-8, 8), tol_numeric: float = TOL_NUMERIC) -> FunctionMatrix:
    """Complete a full-rank m x p matrix: returns p x p B with A B = (I_m, 0).

    ``mode``: 'exact' (Gaussian-rational Euclid; raises ExactModeUnavailable
    when coefficients or pivots are not exactly representable), 'numeric'
    (anchored least-squares fit), or 'auto' (exact first, then numeric)."""
    if A.rows >= A.cols:
        raise StructuralError("completion requires m < p")
    ring = "poly" if A.model.kind in ("disc", "plane", "polydisc") else "laurent"
    if mode == "exact":
        return _exact_completion(A, ring)
    if mode == "numeric":
        return _numeric_completion(A, window, tol_numeric)
    if mode != "auto":
        raise StructuralError(f"unknown completion mode {mode!r}")
    try:
        return _exact_completion(A, ring)
    except ExactModeUnavailable:
        return _numeric_completion(A, window, tol_numeric)
