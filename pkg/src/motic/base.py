"""Exact graded commutative algebra kernel.

A :class:`BaseAlgebra` is a finite graded commutative Q-algebra truncated in
codimension ``n``, together with a degree functional on the top graded piece.
It models the tautological part of the Chow ring of a smooth projective
variety of dimension ``n``.  All scalars are exact rationals; there is no
floating point anywhere in this package.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple


class AlgebraError(ValueError):
    """Raised when algebra data fails validation (names the offending items)."""


class ProfileError(ValueError):
    """Raised on malformed or inconsistent profile data."""


def rat(x) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def rat_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class BaseAlgebra:
    """Graded commutative Q-algebra with basis per codimension 0..n.

    ``basis[r]`` is the ordered tuple of basis symbols in codimension ``r``.
    ``mul`` maps unordered symbol pairs to sparse rational vectors (absent
    means zero); products landing above codimension ``n`` are zero.
    ``degree`` maps codimension-``n`` symbols to rationals (the functional
    over the fundamental class).
    """

    def __init__(self, name, n, basis, mul, degree, unit, zero_cycle,
                 c_top=None, hyperplane=None, metadata=None, validate=True,
                 nondegenerate=False):
        self.name = name
        self.n = int(n)
        if self.n < 0:
            raise AlgebraError("dimension must be nonnegative")
        self.basis: Tuple[Tuple[str, ...], ...] = tuple(tuple(b) for b in basis)
        if len(self.basis) != self.n + 1:
            raise AlgebraError(f"need basis lists for codimensions 0..{self.n}")
        self.codim: Dict[str, int] = {}
        self.rank: Dict[str, int] = {}
        k = 0
        for r, row in enumerate(self.basis):
            for s in row:
                if s in self.codim:
                    raise AlgebraError(f"duplicate basis symbol {s!r}")
                self.codim[s] = r
                self.rank[s] = k
                k += 1
        self.unit = unit
        if self.codim.get(unit) != 0:
            raise AlgebraError("unit must be a codimension-0 basis symbol")
        if len(self.basis[0]) != 1:
            raise AlgebraError("codimension 0 must be spanned by the unit alone")
        # normalize multiplication table to sorted keys, checked entries
        self.mul: Dict[Tuple[str, str], Dict[str, Fraction]] = {}
        for (a, b), vec in dict(mul).items():
            self._check_symbol(a)
            self._check_symbol(b)
            key = (a, b) if self.rank[a] <= self.rank[b] else (b, a)
            out = {}
            for s, c in vec.items():
                self._check_symbol(s)
                c = rat(c)
                if c == 0:
                    continue
                if self.codim[s] != self.codim[a] + self.codim[b]:
                    raise AlgebraError(
                        f"product {a}*{b} has a component {s} of wrong codimension")
                out[s] = c
            if key in self.mul and self.mul[key] != out:
                raise AlgebraError(f"conflicting table entries for {key}")
            if out:
                self.mul[key] = out
        self.degree: Dict[str, Fraction] = {}
        for s, c in dict(degree).items():
            self._check_symbol(s)
            if self.codim[s] != self.n:
                raise AlgebraError(f"degree map defined on non-top symbol {s!r}")
            self.degree[s] = rat(c)
        self.hyperplane = hyperplane
        if hyperplane is not None and self.codim.get(hyperplane) != 1:
            raise AlgebraError("hyperplane must be a codimension-1 symbol")
        self.metadata = dict(metadata or {})
        self.zero_cycle = self._as_class(zero_cycle)
        if self.zero_cycle.integrate() != 1:
            raise AlgebraError("designated zero cycle must have degree one")
        self.c_top = None if c_top is None else self._as_class(c_top)
        if validate:
            self.validate()
        self.pairing = {r: self._pairing_matrix(r) for r in range(self.n + 1)}
        if nondegenerate:
            for r, m in self.pairing.items():
                if _rank(m) != len(self.basis[r]):
                    raise AlgebraError(
                        f"Poincare pairing degenerate in codimension {r}")

    # -- construction helpers -------------------------------------------------

    def _check_symbol(self, s):
        if s not in self.codim:
            raise AlgebraError(f"unknown basis symbol {s!r}")

    def _as_class(self, x) -> "BaseClass":
        if isinstance(x, BaseClass):
            if x.algebra is not self:
                raise AlgebraError("class belongs to a different algebra")
            return x
        if isinstance(x, str):
            return BaseClass(self, {x: Fraction(1)})
        return BaseClass(self, {s: rat(c) for s, c in dict(x).items()})

    def _pairing_matrix(self, r):
        rows = self.basis[r]
        cols = self.basis[self.n - r]
        return [[(self(a) * self(b)).integrate() for b in cols] for a in rows]

    # -- public API ------------------------------------------------------------

    def __call__(self, sym: str) -> "BaseClass":
        self._check_symbol(sym)
        return BaseClass(self, {sym: Fraction(1)})

    def zero(self) -> "BaseClass":
        return BaseClass(self, {})

    def one(self) -> "BaseClass":
        return self(self.unit)

    def cls(self, data) -> "BaseClass":
        return self._as_class(data)

    def symbols(self) -> List[str]:
        return [s for row in self.basis for s in row]

    def mul_symbols(self, a: str, b: str) -> Dict[str, Fraction]:
        if self.codim[a] + self.codim[b] > self.n:
            return {}
        if self.codim[a] == 0:
            return {b: Fraction(1)}
        if self.codim[b] == 0:
            return {a: Fraction(1)}
        key = (a, b) if self.rank[a] <= self.rank[b] else (b, a)
        return self.mul.get(key, {})

    def validate(self):
        """Exhaustive commutativity / associativity / unit checks."""
        syms = self.symbols()
        for a in syms:
            if self.mul_symbols(self.unit, a) != {a: Fraction(1)}:
                raise AlgebraError(f"unit law fails on {a!r}")
        for a in syms:
            for b in syms:
                for c in syms:
                    if self.codim[a] + self.codim[b] + self.codim[c] > self.n:
                        continue
                    left = (self(a) * self(b)) * self(c)
                    right = self(a) * (self(b) * self(c))
                    if left != right:
                        raise AlgebraError(
                            f"associativity fails on triple ({a},{b},{c})")

    def c_top_power(self, k: int) -> "BaseClass":
        if self.c_top is None:
            raise AlgebraError(
                f"algebra {self.name!r} has no top Chern class; excess "
                "intersection needs a c_top (supply an override)")
        out = self.one()
        for _ in range(k):
            out = out * self.c_top
        return out

    def __repr__(self):
        return f"BaseAlgebra({self.name!r}, n={self.n})"


class BaseClass:
    """Sparse rational combination of basis symbols of one algebra."""

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: BaseAlgebra, coeffs: Mapping[str, Fraction]):
        self.algebra = algebra
        self.coeffs = {s: c for s, c in coeffs.items() if c != 0}

    def _require_same(self, other):
        if not isinstance(other, BaseClass) or other.algebra is not self.algebra:
            raise AlgebraError("operands belong to different algebras")

    def __add__(self, other):
        self._require_same(other)
        out = dict(self.coeffs)
        for s, c in other.coeffs.items():
            out[s] = out.get(s, Fraction(0)) + c
        return BaseClass(self.algebra, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return BaseClass(self.algebra, {s: -c for s, c in self.coeffs.items()})

    def __rmul__(self, scalar):
        q = rat(scalar)
        return BaseClass(self.algebra, {s: q * c for s, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, BaseClass):
            return self.__rmul__(other)
        self._require_same(other)
        A = self.algebra
        out: Dict[str, Fraction] = {}
        for s1, c1 in self.coeffs.items():
            for s2, c2 in other.coeffs.items():
                for s, c in A.mul_symbols(s1, s2).items():
                    out[s] = out.get(s, Fraction(0)) + c1 * c2 * c
        return BaseClass(A, out)

    def __eq__(self, other):
        return (isinstance(other, BaseClass) and other.algebra is self.algebra
                and other.coeffs == self.coeffs)

    def __hash__(self):
        return hash((id(self.algebra), self.key()))

    def key(self):
        return tuple(sorted(self.coeffs.items(), key=lambda t: self.algebra.rank[t[0]]))

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_homogeneous(self) -> bool:
        cods = {self.algebra.codim[s] for s in self.coeffs}
        return len(cods) <= 1

    def codimension(self) -> Optional[int]:
        """Codimension of a homogeneous class (None for zero)."""
        cods = {self.algebra.codim[s] for s in self.coeffs}
        if not cods:
            return None
        if len(cods) > 1:
            raise AlgebraError("class is not homogeneous")
        return cods.pop()

    def grade(self, r: int) -> "BaseClass":
        return BaseClass(self.algebra, {
            s: c for s, c in self.coeffs.items() if self.algebra.codim[s] == r})

    def components(self) -> Dict[int, "BaseClass"]:
        out: Dict[int, BaseClass] = {}
        for s, c in self.coeffs.items():
            r = self.algebra.codim[s]
            out.setdefault(r, self.algebra.zero())
            out[r] = out[r] + BaseClass(self.algebra, {s: c})
        return out

    def integrate(self) -> Fraction:
        """Degree of the codimension-n component (zero if there is none)."""
        A = self.algebra
        total = Fraction(0)
        for s, c in self.coeffs.items():
            if A.codim[s] == A.n:
                total += c * A.degree.get(s, Fraction(0))
        return total

    def text(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for s, c in sorted(self.coeffs.items(), key=lambda t: self.algebra.rank[t[0]]):
            parts.append(f"{rat_str(c)}*{s}")
        return " + ".join(parts)

    def __repr__(self):
        return f"<{self.text()}>"


def base_mul(a: BaseClass, b: BaseClass) -> BaseClass:
    return a * b


def base_integrate(a: BaseClass) -> Fraction:
    return a.integrate()


def base_grade(a: BaseClass, r: int) -> BaseClass:
    return a.grade(r)


def _rank(matrix) -> int:
    """Rank of a small exact rational matrix (Gaussian elimination)."""
    m = [row[:] for row in matrix]
    rank = 0
    rows = len(m)
    cols = len(m[0]) if rows else 0
    for col in range(cols):
        piv = next((r for r in range(rank, rows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = Fraction(1) / m[rank][col]
        m[rank] = [x * inv for x in m[rank]]
        for r in range(rows):
            if r != rank and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# constructors for the standard profiles
# ---------------------------------------------------------------------------

def _series_mul(a: List[Fraction], b: List[Fraction], n: int) -> List[Fraction]:
    out = [Fraction(0)] * (n + 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            if i + j > n:
                break
            out[i + j] += x * y
    return out


def _series_inverse(a: List[Fraction], n: int) -> List[Fraction]:
    # a[0] must be 1; truncated geometric inversion
    assert a[0] == 1
    inv = [Fraction(0)] * (n + 1)
    inv[0] = Fraction(1)
    for k in range(1, n + 1):
        acc = Fraction(0)
        for j in range(1, k + 1):
            acc += a[j] * inv[k - j] if j < len(a) else 0
        inv[k] = -acc
    return inv


def chern_series_c_top(n: int, ambient_dim: int, degrees: Sequence[int]) -> List[Fraction]:
    """Coefficients of c(T_X) = (1+D)^{N+1} / prod(1+d_i D), truncated at codim n.

    Valid for complete intersections in ordinary projective space; weighted
    ambients must override c_top explicitly.
    """
    series = [Fraction(0)] * (n + 1)
    # (1+D)^{N+1}
    binom = Fraction(1)
    for k in range(n + 1):
        series[k] = binom
        binom = binom * (ambient_dim + 1 - k) / (k + 1)
    for d in degrees:
        series = _series_mul(series, _series_inverse(
            [Fraction(1), Fraction(d)] + [Fraction(0)] * max(0, n - 1), n), n)
    return series


def make_hypersurface_algebra(n: int, ambient_dim: int, degrees: Sequence[int],
                              name: Optional[str] = None,
                              c_top_override=None,
                              weighted: bool = False) -> BaseAlgebra:
    """Truncated polynomial algebra Q[D]/(D^{n+1}) of a complete intersection.

    ``degrees`` are the multidegrees; the total degree d = prod(degrees) feeds
    the degree map and the distinguished zero cycle o = D^n / d.
    """
    degrees = list(degrees)
    if n < 1:
        raise AlgebraError("need n >= 1")
    if ambient_dim != n + len(degrees):
        raise AlgebraError(
            f"ambient dimension {ambient_dim} != n + number of degrees")
    if any(d < 1 for d in degrees):
        raise AlgebraError("all degrees must be positive")
    d = 1
    for x in degrees:
        d *= x
    syms = ["1"] + [f"D^{k}" for k in range(1, n + 1)]
    basis = [(s,) for s in syms]
    mul = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            if i + j <= n:
                mul[(syms[i], syms[j])] = {syms[i + j]: Fraction(1)}
    degree = {syms[n]: Fraction(d)}
    if weighted and c_top_override is None:
        raise AlgebraError(
            "weighted ambient: supply c_top_override (the engine refuses to "
            "guess Chern data outside ordinary projective space)")
    alg = BaseAlgebra(
        name=name or f"ci(n={n},deg={'x'.join(map(str, degrees))})",
        n=n, basis=basis, mul=mul, degree=degree, unit="1",
        zero_cycle={syms[n]: Fraction(1, d)},
        c_top=None, hyperplane=syms[1],
        metadata={"kind": "hypersurface", "ambient_dim": ambient_dim,
                  "degrees": degrees, "e": len(degrees), "d": d},
        validate=True)
    if c_top_override is not None:
        alg.c_top = alg.cls(c_top_override)
    else:
        coeffs = chern_series_c_top(n, ambient_dim, degrees)
        alg.c_top = alg.cls({syms[n]: coeffs[n]})
    return alg


def make_curve_algebra(g: int, point_symbols: Sequence[str],
                       name: Optional[str] = None,
                       c_top_override=None) -> BaseAlgebra:
    """Curve of genus g with formal degree-one point classes in codimension 1.

    All products of two point classes vanish (codim 2 > 1); c_top defaults to
    (2-2g) times the first point, a modeling choice that is overridable.
    """
    points = list(point_symbols)
    if g < 0:
        raise AlgebraError("genus must be nonnegative")
    if not points:
        raise AlgebraError("need at least one point symbol")
    basis = [("1",), tuple(points)]
    degree = {p: Fraction(1) for p in points}
    alg = BaseAlgebra(
        name=name or f"curve(g={g})",
        n=1, basis=basis, mul={}, degree=degree, unit="1",
        zero_cycle=points[0], c_top=None, hyperplane=points[0],
        metadata={"kind": "curve", "genus": g, "points": points},
        validate=True)
    if c_top_override is not None:
        alg.c_top = alg.cls(c_top_override)
    else:
        alg.c_top = alg.cls({points[0]: Fraction(2 - 2 * g)})
    return alg


def make_point_algebra(name: str = "point") -> BaseAlgebra:
    return BaseAlgebra(name=name, n=0, basis=[("1",)], mul={},
                       degree={"1": Fraction(1)}, unit="1", zero_cycle="1",
                       c_top="1", metadata={"kind": "point"}, validate=True)


def make_split_algebra(n: int, basis, mul, degree, name: str = "split",
                       unit: Optional[str] = None, zero_cycle=None,
                       hyperplane=None, c_top_override=None,
                       nondegenerate: bool = True,
                       metadata=None) -> BaseAlgebra:
    """Validated algebra from explicit tables; stores the Poincare pairing.

    ``basis`` is a sequence of per-codimension symbol lists, ``mul`` a mapping
    (sym, sym) -> {sym: rational}, ``degree`` a mapping on top symbols.
    Associativity or commutativity failures raise with the offending triple.
    """
    basis = [tuple(b) for b in basis]
    unit = unit or basis[0][0]
    if zero_cycle is None:
        top = basis[n]
        # fall back to the first top symbol scaled to degree one
        s = top[0]
        d = rat(dict(degree)[s])
        zero_cycle = {s: Fraction(1) / d}
    md = {"kind": "split"}
    md.update(metadata or {})
    return BaseAlgebra(name=name, n=n, basis=basis, mul=mul, degree=degree,
                       unit=unit, zero_cycle=zero_cycle,
                       c_top=c_top_override, hyperplane=hyperplane,
                       metadata=md, validate=True, nondegenerate=nondegenerate)


def tensor_algebra(a1: BaseAlgebra, a2: BaseAlgebra, name: Optional[str] = None,
                   sep: str = "|") -> Tuple[BaseAlgebra, Dict[Tuple[str, str], str]]:
    """Fused Kuenneth tensor product with pair symbols ``b1|b2``.

    Returns the algebra and the symbol dictionary (s1, s2) -> fused symbol.
    Rational Chow rings carry no Koszul signs (all classes in even degree).
    """
    n = a1.n + a2.n
    names: Dict[Tuple[str, str], str] = {}
    basis: List[List[str]] = [[] for _ in range(n + 1)]
    for r1, row1 in enumerate(a1.basis):
        for s1 in row1:
            for r2, row2 in enumerate(a2.basis):
                for s2 in row2:
                    sym = f"{s1}{sep}{s2}"
                    names[(s1, s2)] = sym
                    basis[r1 + r2].append(sym)
    mul = {}
    pairs = list(names.items())
    for (s1, s2), sym in pairs:
        for (t1, t2), tym in pairs:
            if a1.codim[s1] + a1.codim[t1] + a2.codim[s2] + a2.codim[t2] > n:
                continue
            prod1 = a1.mul_symbols(s1, t1)
            prod2 = a2.mul_symbols(s2, t2)
            vec = {}
            for u1, c1 in prod1.items():
                for u2, c2 in prod2.items():
                    vec[names[(u1, u2)]] = c1 * c2
            if vec:
                mul[(sym, tym)] = vec
    degree = {}
    for (s1, s2), sym in pairs:
        if a1.codim[s1] == a1.n and a2.codim[s2] == a2.n:
            degree[sym] = a1.degree.get(s1, Fraction(0)) * a2.degree.get(s2, Fraction(0))
    zc = {}
    for (s1, c1) in a1.zero_cycle.coeffs.items():
        for (s2, c2) in a2.zero_cycle.coeffs.items():
            zc[names[(s1, s2)]] = c1 * c2
    ct = None
    if a1.c_top is not None and a2.c_top is not None:
        ct = {}
        for (s1, c1) in a1.c_top.coeffs.items():
            for (s2, c2) in a2.c_top.coeffs.items():
                ct[names[(s1, s2)]] = ct.get(names[(s1, s2)], Fraction(0)) + c1 * c2
    alg = BaseAlgebra(
        name=name or f"{a1.name}x{a2.name}",
        n=n, basis=[tuple(b) for b in basis], mul=mul, degree=degree,
        unit=names[(a1.unit, a2.unit)], zero_cycle=zc, c_top=ct,
        metadata={"kind": "split", "product_of": (a1.name, a2.name)},
        validate=True)
    return alg, names
