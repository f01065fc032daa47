"""Truncated Laurent series and fiber-jet polynomials.

Two rings are implemented here.  ``Series`` is a truncated Laurent expansion

    f(u) = sum_{k = k_min}^{k_max} c_k u^k

of a single complex base variable, stored as a dense coefficient block over
its support.  ``JetPolynomial`` is a polynomial in a set of fiber variables
(zeta's, y's, z, ...) with ``Series`` coefficients, truncated at a total
fiber degree ``d``.  Jets are the universal scalar of the kernel: contact
forms, vector fields and coordinate changes all carry jet coefficients.

Truncation is tracked by a sticky ``truncated`` flag.  Whenever a product or
substitution discards fiber degrees above ``d`` or Laurent exponents outside
the working window, the flag is raised on the result and propagates through
all subsequent arithmetic.  Verification code refuses to certify exact
identities on flagged values.

All values are immutable after construction and all operations are pure, so
they may be shared freely between threads.
"""

from __future__ import annotations

import numpy as np

from .errors import NotAUnit, StructuralError

#: default fiber truncation degree
DEFAULT_DEGREE = 4
#: default Laurent window (inclusive)
DEFAULT_WINDOW = (-8, 8)


def _as_finite_array(coeffs) -> np.ndarray:
    arr = np.asarray(coeffs, dtype=complex)
    if arr.ndim != 1:
        raise StructuralError("series coefficients must form a 1-d array")
    if arr.size and not np.all(np.isfinite(arr.view(float))):
        raise StructuralError("non-finite coefficient rejected")
    return arr


class Series:
    """Truncated Laurent expansion of one complex variable.

    The zero series is canonical: empty coefficient block, ``k_min = 0``.
    A series with no variable dependence may carry ``var=None``; it unifies
    with any named variable during arithmetic.
    """

    __slots__ = ("var", "k_min", "coeffs")

    def __init__(self, var, k_min: int, coeffs, trim: bool = True):
        arr = _as_finite_array(coeffs)
        if trim:
            nz = np.flatnonzero(arr)
            if nz.size == 0:
                k_min, arr = 0, arr[:0]
            else:
                k_min = k_min + int(nz[0])
                arr = arr[nz[0] : nz[-1] + 1]
        object.__setattr__(self, "var", var if arr.size else var)
        object.__setattr__(self, "k_min", int(k_min))
        object.__setattr__(self, "coeffs", arr)
        arr.setflags(write=False)

    def __setattr__(self, *a):
        raise AttributeError("Series is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(var=None) -> "Series":
        return Series(var, 0, [])

    @staticmethod
    def constant(c, var=None) -> "Series":
        return Series(var, 0, [c])

    @staticmethod
    def monomial(var, k: int, c=1.0) -> "Series":
        return Series(var, k, [c])

    @staticmethod
    def variable(var) -> "Series":
        return Series(var, 1, [1.0])

    # -- structure ---------------------------------------------------------

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def is_constant(self) -> bool:
        return self.coeffs.size == 0 or (self.k_min == 0 and self.coeffs.size == 1)

    def constant_value(self) -> complex:
        if self.is_zero():
            return 0j
        if not self.is_constant():
            raise StructuralError("series is not constant")
        return complex(self.coeffs[0])

    def coeff(self, k: int) -> complex:
        if self.is_zero() or not (self.k_min <= k <= self.k_max):
            return 0j
        return complex(self.coeffs[k - self.k_min])

    def residue_coeff(self) -> complex:
        """Coefficient of u^{-1}; the residue of f du up to 2 pi i."""
        return self.coeff(-1)

    def sup_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def _unify_var(self, other: "Series"):
        a, b = self.var, other.var
        if a is None:
            return b
        if b is None or a == b:
            return a
        raise StructuralError(f"series variables differ: {a!r} vs {b!r}")

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Series):
            other = Series.constant(other)
        var = self._unify_var(other)
        if self.is_zero():
            return Series(var, other.k_min, other.coeffs, trim=False)
        if other.is_zero():
            return Series(var, self.k_min, self.coeffs, trim=False)
        lo = min(self.k_min, other.k_min)
        hi = max(self.k_max, other.k_max)
        out = np.zeros(hi - lo + 1, dtype=complex)
        out[self.k_min - lo : self.k_max - lo + 1] += self.coeffs
        out[other.k_min - lo : other.k_max - lo + 1] += other.coeffs
        return Series(var, lo, out)

    def __neg__(self):
        return Series(self.var, self.k_min, -self.coeffs, trim=False)

    def __sub__(self, other):
        if not isinstance(other, Series):
            other = Series.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Series):
            c = complex(other)
            if c == 0:
                return Series.zero(self.var)
            return Series(self.var, self.k_min, self.coeffs * c, trim=False)
        var = self._unify_var(other)
        if self.is_zero() or other.is_zero():
            return Series.zero(var)
        if self.coeffs.size == 1 and other.coeffs.size == 1:
            return Series(var, self.k_min + other.k_min,
                          self.coeffs * other.coeffs, trim=False)
        return Series(var, self.k_min + other.k_min,
                      np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0 or int(n) != n:
            raise StructuralError("series powers must be nonnegative integers")
        out = Series.constant(1.0, self.var)
        base = self
        n = int(n)
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    # -- calculus ----------------------------------------------------------

    def derivative(self) -> "Series":
        if self.is_zero():
            return Series.zero(self.var)
        ks = np.arange(self.k_min, self.k_max + 1)
        return Series(self.var, self.k_min - 1, self.coeffs * ks)

    def antiderivative(self, drop_residue_tol: float | None = None) -> "Series":
        """Termwise primitive.  The u^{-1} coefficient has no Laurent
        primitive; it is dropped when its magnitude is below the stated
        tolerance and rejected otherwise."""
        if self.is_zero():
            return Series.zero(self.var)
        res = self.residue_coeff()
        if res != 0:
            if drop_residue_tol is None or abs(res) > drop_residue_tol:
                raise StructuralError(
                    f"u^-1 coefficient {res!r} obstructs a Laurent primitive")
        ks = np.arange(self.k_min, self.k_max + 1)
        coeffs = np.where(ks == -1, 0, self.coeffs) / np.where(ks == -1, 1, ks + 1)
        return Series(self.var, self.k_min + 1, coeffs)

    def inverse(self, k_span: int = 24) -> "Series":
        """Formal reciprocal in the Laurent ring.

        Factors out the lowest monomial c u^v and inverts the remaining unit
        power series by the geometric expansion, keeping ``k_span + 1``
        coefficients.  Nonvanishing of the series on the relevant sample
        circles is the caller's responsibility (checked where a surface
        model is in scope)."""
        if self.is_zero():
            raise NotAUnit("cannot invert the zero series")
        c = self.coeffs[0]
        v = self.k_min
        if self.coeffs.size == 1:
            return Series(self.var, -v, [1.0 / c])
        # reciprocal of 1 + g with g = higher-order part / leading monomial
        g = self.coeffs / c
        out = np.zeros(k_span + 1, dtype=complex)
        out[0] = 1.0
        for k in range(1, k_span + 1):
            acc = 0j
            for j in range(1, min(k, self.coeffs.size - 1) + 1):
                acc += g[j] * out[k - j]
            out[k] = -acc
        return Series(self.var, -v, out / c)

    # -- evaluation --------------------------------------------------------

    def __call__(self, u):
        """Evaluate at a complex point or ndarray of points."""
        if self.is_zero():
            return np.zeros_like(np.asarray(u, dtype=complex)) if np.ndim(u) else 0j
        u = np.asarray(u, dtype=complex) if np.ndim(u) else complex(u)
        acc = np.zeros_like(u) if np.ndim(u) else 0j
        for c in self.coeffs[::-1]:
            acc = acc * u + c
        if self.k_min != 0:
            acc = acc * u ** self.k_min
        return acc

    # -- window control ----------------------------------------------------

    def clip(self, window) -> tuple["Series", bool]:
        """Restrict support to [window[0], window[1]]; returns (clipped, lost)."""
        if self.is_zero():
            return self, False
        lo, hi = window
        if self.k_min >= lo and self.k_max <= hi:
            return self, False
        a = max(self.k_min, lo)
        b = min(self.k_max, hi)
        if a > b:
            return Series.zero(self.var), True
        kept = self.coeffs[a - self.k_min : b - self.k_min + 1]
        dropped = self.sup_coeff() and (
            np.any(self.coeffs[: a - self.k_min] != 0)
            or np.any(self.coeffs[b - self.k_min + 1 :] != 0))
        return Series(self.var, a, kept), bool(dropped)

    def __repr__(self):
        if self.is_zero():
            return "Series(0)"
        v = self.var or "u"
        bits = [f"{c:.6g}*{v}^{k}" for k, c in
                zip(range(self.k_min, self.k_max + 1), self.coeffs) if c != 0]
        return "Series(" + " + ".join(bits) + ")"


def exp_series(s: Series, max_terms: int = 64, tol: float = 1e-18) -> Series:
    """exp of a series with k_min >= 0, exact on the constant part."""
    if not s.is_zero() and s.k_min < 0:
        raise StructuralError("exp_series requires a Taylor-type argument")
    c0 = s.coeff(0)
    h = s - Series.constant(c0, s.var)
    out = Series.constant(1.0, s.var)
    term = Series.constant(1.0, s.var)
    for j in range(1, max_terms):
        term = term * h * (1.0 / j)
        if term.is_zero() or term.sup_coeff() < tol:
            break
        out = out + term
    return out * complex(np.exp(c0))


# ---------------------------------------------------------------------------
# fiber monomials and jets
# ---------------------------------------------------------------------------

class FiberMonomial:
    """Multiplicative monomial in the fiber variables, e.g. zeta1^2 * z."""

    __slots__ = ("_items", "_hash", "degree")

    def __init__(self, exponents=()):
        if isinstance(exponents, dict):
            exponents = exponents.items()
        items = []
        for var, e in exponents:
            if e < 0 or int(e) != e:
                raise StructuralError("monomial exponents must be nonnegative integers")
            if e:
                items.append((var, int(e)))
        items = tuple(sorted(items))
        object.__setattr__(self, "_items", items)
        object.__setattr__(self, "degree", sum(e for _, e in items))
        object.__setattr__(self, "_hash", hash(items))

    def __setattr__(self, *a):
        raise AttributeError("FiberMonomial is immutable")

    @property
    def exponents(self) -> dict:
        return dict(self._items)

    def get(self, var) -> int:
        for v, e in self._items:
            if v == var:
                return e
        return 0

    def vars(self):
        return tuple(v for v, _ in self._items)

    def __mul__(self, other: "FiberMonomial") -> "FiberMonomial":
        key = (self._items, other._items)
        got = _MONOMIAL_PRODUCTS.get(key)
        if got is not None:
            return got
        d = dict(self._items)
        for v, e in other._items:
            d[v] = d.get(v, 0) + e
        prod = FiberMonomial(d)
        if len(_MONOMIAL_PRODUCTS) < 65536:
            _MONOMIAL_PRODUCTS[key] = prod
        return prod

    def without(self, var) -> "FiberMonomial":
        return FiberMonomial([(v, e) for v, e in self._items if v != var])

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, FiberMonomial) and self._items == other._items

    def __repr__(self):
        if not self._items:
            return "1"
        return "*".join(v if e == 1 else f"{v}^{e}" for v, e in self._items)


MONOMIAL_ONE = FiberMonomial()
_MONOMIAL_PRODUCTS: dict = {}


class JetPolynomial:
    """Polynomial in fiber variables with Series coefficients, truncated at
    total fiber degree ``degree``.

    ``terms`` maps FiberMonomial -> Series; absent monomials are zero and
    explicitly zero series are never stored.  ``truncated`` records whether
    any operation in this value's history discarded fiber degrees above the
    truncation or Laurent exponents outside ``window``.
    """

    __slots__ = ("degree", "terms", "window", "truncated")

    def __init__(self, degree: int, terms: dict, window=DEFAULT_WINDOW,
                 truncated: bool = False):
        clean = {}
        lost = truncated
        for mono, s in terms.items():
            if not isinstance(mono, FiberMonomial):
                mono = FiberMonomial(mono)
            if mono.degree > degree:
                lost = True
                continue
            if not isinstance(s, Series):
                s = Series.constant(s)
            s, dropped = s.clip(window)
            lost = lost or dropped
            if not s.is_zero():
                if mono in clean:
                    s = clean[mono] + s
                    if s.is_zero():
                        del clean[mono]
                        continue
                clean[mono] = s
        object.__setattr__(self, "degree", int(degree))
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "window", (int(window[0]), int(window[1])))
        object.__setattr__(self, "truncated", bool(lost))

    def __setattr__(self, *a):
        raise AttributeError("JetPolynomial is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(degree=DEFAULT_DEGREE, window=DEFAULT_WINDOW) -> "JetPolynomial":
        return JetPolynomial(degree, {}, window)

    @staticmethod
    def constant(c, degree=DEFAULT_DEGREE, window=DEFAULT_WINDOW) -> "JetPolynomial":
        return JetPolynomial(degree, {MONOMIAL_ONE: Series.constant(c)}, window)

    @staticmethod
    def from_series(s: Series, degree=DEFAULT_DEGREE, window=DEFAULT_WINDOW) -> "JetPolynomial":
        return JetPolynomial(degree, {MONOMIAL_ONE: s}, window)

    @staticmethod
    def variable(name, degree=DEFAULT_DEGREE, window=DEFAULT_WINDOW) -> "JetPolynomial":
        return JetPolynomial(degree, {FiberMonomial({name: 1}): Series.constant(1.0)},
                             window)

    # -- structure ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def sup_coeff(self) -> float:
        return max((s.sup_coeff() for s in self.terms.values()), default=0.0)

    def coeff(self, mono) -> Series:
        if not isinstance(mono, FiberMonomial):
            mono = FiberMonomial(mono)
        return self.terms.get(mono, Series.zero())

    def zero_section(self) -> Series:
        """Constant-monomial coefficient: the restriction to the zero section."""
        return self.terms.get(MONOMIAL_ONE, Series.zero())

    def min_fiber_degree(self) -> int:
        return min((m.degree for m in self.terms), default=self.degree + 1)

    def part_of_degree(self, k: int) -> "JetPolynomial":
        return JetPolynomial(self.degree,
                             {m: s for m, s in self.terms.items() if m.degree == k},
                             self.window, self.truncated)

    def up_to_degree(self, k: int) -> "JetPolynomial":
        return JetPolynomial(self.degree,
                             {m: s for m, s in self.terms.items() if m.degree <= k},
                             self.window, self.truncated)

    def fiber_vars(self):
        out = set()
        for m in self.terms:
            out.update(m.vars())
        return out

    def _meta(self, other: "JetPolynomial"):
        if self.degree != other.degree:
            raise StructuralError("jet truncation degrees differ")
        window = (min(self.window[0], other.window[0]),
                  max(self.window[1], other.window[1]))
        return window, self.truncated or other.truncated

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, JetPolynomial):
            other = JetPolynomial.constant(other, self.degree, self.window)
        window, lost = self._meta(other)
        out = dict(self.terms)
        for m, s in other.terms.items():
            out[m] = out[m] + s if m in out else s
        return JetPolynomial(self.degree, out, window, lost)

    def __neg__(self):
        return JetPolynomial(self.degree, {m: -s for m, s in self.terms.items()},
                             self.window, self.truncated)

    def __sub__(self, other):
        if not isinstance(other, JetPolynomial):
            other = JetPolynomial.constant(other, self.degree, self.window)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Series):
            return self.scale_series(other)
        if not isinstance(other, JetPolynomial):
            c = complex(other)
            return JetPolynomial(self.degree,
                                 {m: s * c for m, s in self.terms.items()},
                                 self.window, self.truncated)
        window, lost = self._meta(other)
        out = {}
        d = self.degree
        for m1, s1 in self.terms.items():
            d1 = m1.degree
            for m2, s2 in other.terms.items():
                if d1 + m2.degree > d:
                    lost = True
                    continue
                m = m1 * m2
                prod = s1 * s2
                out[m] = out[m] + prod if m in out else prod
        return JetPolynomial(d, out, window, lost)

    __rmul__ = __mul__

    def scale_series(self, s: Series) -> "JetPolynomial":
        return JetPolynomial(self.degree,
                             {m: c * s for m, c in self.terms.items()},
                             self.window, self.truncated)

    def __pow__(self, n: int):
        if n < 0 or int(n) != n:
            raise StructuralError("jet powers must be nonnegative integers")
        out = JetPolynomial.constant(1.0, self.degree, self.window)
        for _ in range(int(n)):
            out = out * self
        return out

    # -- substitution ------------------------------------------------------

    def substitute(self, mapping: dict, base_shift: "JetPolynomial | None" = None) -> "JetPolynomial":
        """Replace fiber variables by jets; unnamed variables persist.

        ``mapping`` sends variable names to JetPolynomial images.  With
        ``base_shift`` b (a jet of positive fiber degree) the base variable
        is sent to u + b and series coefficients are Taylor-shifted, which
        terminates at the truncation degree.  The result is truncated to
        this jet's degree and window."""
        for v, img in mapping.items():
            if isinstance(img, JetPolynomial) and img.degree != self.degree:
                raise StructuralError("substitution image has mismatched degree")
        if base_shift is not None and base_shift.min_fiber_degree() < 1:
            raise StructuralError("base shift must vanish on the zero section")
        out = JetPolynomial.zero(self.degree, self.window)
        if self.truncated:
            out = JetPolynomial(self.degree, {}, self.window, True)
        pow_cache: dict = {}

        def var_power(var, e):
            key = (var, e)
            if key not in pow_cache:
                img = mapping.get(var)
                if img is None:
                    img = JetPolynomial.variable(var, self.degree, self.window)
                elif not isinstance(img, JetPolynomial):
                    img = JetPolynomial.constant(img, self.degree, self.window)
                pow_cache[key] = img ** e
            return pow_cache[key]

        for mono, s in self.terms.items():
            if base_shift is None or base_shift.is_zero():
                piece = JetPolynomial.from_series(s, self.degree, self.window)
            else:
                piece = taylor_shift(s, base_shift)
            for var, e in mono.exponents.items():
                piece = piece * var_power(var, e)
            out = out + piece
        return out

    # -- calculus ----------------------------------------------------------

    def derivative_fiber(self, var) -> "JetPolynomial":
        out = {}
        for m, s in self.terms.items():
            e = m.get(var)
            if e:
                d = dict(m.exponents)
                d[var] = e - 1
                mono = FiberMonomial(d)
                term = s * float(e)
                out[mono] = out[mono] + term if mono in out else term
        return JetPolynomial(self.degree, out, self.window, self.truncated)

    def derivative_base(self) -> "JetPolynomial":
        return JetPolynomial(self.degree,
                             {m: s.derivative() for m, s in self.terms.items()},
                             self.window, self.truncated)

    def antiderivative_fiber(self, var) -> "JetPolynomial":
        """Primitive in one fiber variable with zero constant; degree-raising,
        so top-degree terms flag truncation when pushed past the cutoff."""
        out = {}
        lost = self.truncated
        for m, s in self.terms.items():
            if m.degree + 1 > self.degree:
                lost = True
                continue
            e = m.get(var)
            d = dict(m.exponents)
            d[var] = e + 1
            mono = FiberMonomial(d)
            term = s * (1.0 / (e + 1))
            out[mono] = out[mono] + term if mono in out else term
        return JetPolynomial(self.degree, out, self.window, lost)

    # -- unit inversion ----------------------------------------------------

    def invert_unit(self, samples=None, tol: float = 1e-9,
                    k_span: int | None = None) -> "JetPolynomial":
        """Multiplicative inverse of a jet whose zero-section series is a unit.

        When ``samples`` (points on the model's validity circles) are given,
        nonvanishing of the zero-section series is checked there first."""
        f0 = self.zero_section()
        if f0.is_zero():
            raise NotAUnit("zero-section coefficient vanishes identically")
        if samples is not None:
            vals = f0(np.asarray(samples, dtype=complex))
            bad = np.abs(vals) <= tol
            if np.any(bad):
                pt = np.asarray(samples, dtype=complex)[bad][0]
                raise NotAUnit(f"zero-section coefficient vanishes near u = {pt}")
        span = k_span if k_span is not None else (self.window[1] - self.window[0])
        g0 = f0.inverse(span)
        inv0 = JetPolynomial.from_series(g0, self.degree, self.window)
        h = self - JetPolynomial.from_series(f0, self.degree, self.window)
        if h.is_zero():
            return JetPolynomial(self.degree, inv0.terms, self.window,
                                 self.truncated or inv0.truncated)
        # (f0 + h)^-1 = f0^-1 sum_j (-f0^-1 h)^j, h of positive fiber degree
        e = -(inv0 * h)
        out = JetPolynomial.constant(1.0, self.degree, self.window)
        power = JetPolynomial.constant(1.0, self.degree, self.window)
        for _ in range(self.degree):
            power = power * e
            if power.is_zero():
                break
            out = out + power
        result = out * inv0
        return JetPolynomial(self.degree, result.terms, self.window,
                             result.truncated or self.truncated)

    # -- evaluation and comparison -----------------------------------------

    def evaluate(self, u, fiber: dict | None = None):
        fiber = fiber or {}
        acc = None
        for m, s in self.terms.items():
            val = s(u)
            for var, e in m.exponents.items():
                val = val * (complex(fiber.get(var, 0j)) ** e)
            acc = val if acc is None else acc + val
        if acc is None:
            return np.zeros_like(np.asarray(u, dtype=complex)) if np.ndim(u) else 0j
        return acc

    def __repr__(self):
        if not self.terms:
            return "Jet(0)"
        bits = [f"({s!r})*{m!r}" for m, s in sorted(self.terms.items(),
                                                    key=lambda kv: repr(kv[0]))]
        flag = ", truncated" if self.truncated else ""
        return f"Jet({' + '.join(bits)}{flag})"


def taylor_shift(s: Series, shift: JetPolynomial) -> JetPolynomial:
    """s(u + b) as a jet, for a shift b of positive fiber degree.

    The Taylor expansion sum_k s^(k)(u) b^k / k! terminates at the jet
    truncation since b has no zero-section part."""
    if shift.min_fiber_degree() < 1:
        raise StructuralError("taylor_shift requires a shift of positive degree")
    d, window = shift.degree, shift.window
    acc = JetPolynomial.from_series(s, d, window)
    power = JetPolynomial.constant(1.0, d, window)
    deriv = s
    fact = 1.0
    for k in range(1, d + 1):
        power = power * shift
        if power.is_zero():
            break
        deriv = deriv.derivative()
        if deriv.is_zero():
            break
        fact *= k
        acc = acc + power.scale_series(deriv * (1.0 / fact))
    return acc


def sup_diff(a: JetPolynomial, b: JetPolynomial) -> float:
    """Max coefficient magnitude of a - b over all retained degrees."""
    return (a - b).sup_coeff()


def jet_arith(a: JetPolynomial, b: JetPolynomial, kind: str, c=None) -> JetPolynomial:
    """Named dispatch over the basic ring operations."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "scale":
        return a * c
    raise StructuralError(f"unknown arith kind {kind!r}")
