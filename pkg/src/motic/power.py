"""Normal-form calculus for tautological cycles on powers of a variety.

A cycle on the m-th power is a rational combination of partition terms: a set
partition of the factors with one basis symbol attached to each block.  The
block ``{i, j, k}`` carrying symbol ``z`` denotes the push-forward of ``z``
along the small-diagonal embedding into those factors; singletons are plain
pull-backs.  Products, projections and diagonal push-forwards all stay inside
this normal form; the excess of non-transverse diagonal products is corrected
by powers of the top Chern class.

Profiles bundle the base algebra with rewrite rules: which diagonal
push-forwards are declared completely decomposable.  Products of varieties are
handled by giving a profile several independent "atoms", one per factor; a
term then carries one partition per atom, which is exactly the Kuenneth
structure of a product power.
"""

from __future__ import annotations

import itertools
import os
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .base import (AlgebraError, BaseAlgebra, BaseClass, ProfileError,
                   make_curve_algebra, make_hypersurface_algebra,
                   make_point_algebra, rat, rat_str)

Block = Tuple[int, ...]
AtomKey = Tuple[Tuple[Block, str], ...]   # blocks sorted by least element
TermKey = Tuple[AtomKey, ...]             # one atom key per atom
Expansion = List[Tuple[Fraction, AtomKey]]


class ResourceBoundError(RuntimeError):
    """Raised when a computation exceeds the configured term cap."""


def _term_cap() -> int:
    try:
        return int(os.environ.get("MOTIC_MAX_TERMS", "200000"))
    except ValueError:
        return 200000


class Atom:
    """One variety factor of a profile: algebra plus rewrite data.

    ``rules`` maps a basis symbol z to the declared expansion of the diagonal
    push-forward of z into two factors, as a list of (coeff, left, right)
    symbol pairs.  ``unit_rule`` optionally decomposes whole diagonal blocks:
    ``("ci", expansion_of_the_triple_diagonal)`` for profiles whose small
    diagonals decompose, or ``("gamma", k)`` when the modified diagonal
    classes vanish from k factors on.
    """

    def __init__(self, algebra: BaseAlgebra,
                 rules: Optional[Mapping[str, Sequence[Tuple[Fraction, str, str]]]] = None,
                 unit_rule=None):
        self.algebra = algebra
        self.rules: Dict[str, List[Tuple[Fraction, str, str]]] = {}
        for sym, rhs in (rules or {}).items():
            algebra._check_symbol(sym)
            terms = [(rat(c), u, v) for (c, u, v) in rhs]
            for _, u, v in terms:
                algebra._check_symbol(u)
                algebra._check_symbol(v)
                if algebra.codim[u] + algebra.codim[v] != algebra.n + algebra.codim[sym]:
                    raise ProfileError(
                        f"rule for {sym!r}: term {u}x{v} has wrong codimension")
            self.rules[sym] = terms
        self.unit_rule = unit_rule
        self._expansions: Dict[int, Expansion] = {}
        if unit_rule is not None:
            kind = unit_rule[0]
            if kind == "ci":
                self._expansions[3] = unit_rule[1]
            elif kind != "gamma":
                raise ProfileError(f"unknown unit rule kind {kind!r}")
        self._validate_rules()

    def _validate_rules(self):
        A = self.algebra
        for sym, rhs in self.rules.items():
            for side in (0, 1):
                pushed: Dict[str, Fraction] = {}
                for c, u, v in rhs:
                    keep, drop = (u, v) if side == 0 else (v, u)
                    if A.codim[drop] == A.n:
                        w = c * A.degree.get(drop, Fraction(0))
                        pushed[keep] = pushed.get(keep, Fraction(0)) + w
                pushed = {s: c for s, c in pushed.items() if c != 0}
                if pushed != {sym: Fraction(1)}:
                    raise ProfileError(
                        f"rule for {sym!r} does not push forward to {sym!r} "
                        f"on factor {side + 1}")

    def has_unit_rule_for(self, size: int) -> bool:
        if self.unit_rule is None:
            return False
        if self.unit_rule[0] == "ci":
            return size >= 3
        return size >= self.unit_rule[1]


class Profile:
    """A variety model: one or more atoms, each with its rewrite rules."""

    def __init__(self, atoms: Sequence[Atom], name: Optional[str] = None):
        if not atoms:
            raise ProfileError("profile needs at least one atom")
        self.atoms: Tuple[Atom, ...] = tuple(atoms)
        self.name = name or "*".join(a.algebra.name for a in self.atoms)
        self.n = sum(a.algebra.n for a in self.atoms)

    # -- class constructors ----------------------------------------------------

    def _atom_classes(self, z) -> Tuple[BaseClass, ...]:
        if isinstance(z, BaseClass):
            if len(self.atoms) != 1:
                raise ProfileError("pass one base class per atom on product profiles")
            z = (z,)
        zs = tuple(z)
        if len(zs) != len(self.atoms):
            raise ProfileError("need one base class per atom")
        return tuple(a.algebra.cls(x) for a, x in zip(self.atoms, zs))

    def zero(self, m: int) -> "PowerClass":
        return PowerClass(self, m, {})

    def unit_class(self, m: int) -> "PowerClass":
        key = tuple(
            tuple(((i,), a.algebra.unit) for i in range(1, m + 1))
            for a in self.atoms)
        return PowerClass(self, m, {key: Fraction(1)})

    def factor_class(self, m: int, i: int, z) -> "PowerClass":
        """Pull-back of a base class along the i-th projection."""
        if not 1 <= i <= m:
            raise ProfileError(f"factor index {i} out of range")
        zs = self._atom_classes(z)
        out = self.unit_class(m)
        for a_idx, za in enumerate(zs):
            out = out._mul_symbol_at(a_idx, i, za)
        return out

    def diagonal_push(self, z, m: int) -> "PowerClass":
        """Small-diagonal push-forward of a base class into m factors."""
        if m < 1:
            raise ProfileError("arity must be positive")
        zs = self._atom_classes(z)
        block = tuple(range(1, m + 1))
        terms: Dict[TermKey, Fraction] = {}
        choices = []
        for za in zs:
            if za.is_zero():
                return self.zero(m)
            choices.append(sorted(za.coeffs.items(),
                                  key=lambda t: za.algebra.rank[t[0]]))
        for combo in itertools.product(*choices):
            coeff = Fraction(1)
            key = []
            for (sym, c) in combo:
                coeff *= c
                key.append(((block, sym),))
            terms[tuple(key)] = terms.get(tuple(key), Fraction(0)) + coeff
        return PowerClass(self, m, terms)

    def small_diagonal(self, m: int) -> "PowerClass":
        return self.diagonal_push(tuple(a.algebra.one() for a in self.atoms), m)

    def point_classes(self) -> Tuple[BaseClass, ...]:
        return tuple(a.algebra.zero_cycle for a in self.atoms)

    def zero_cycle_class(self, m: int, i: int) -> "PowerClass":
        return self.factor_class(m, i, self.point_classes())

    # -- rewriting --------------------------------------------------------------

    def _unit_expansion(self, a_idx: int, size: int) -> Expansion:
        atom = self.atoms[a_idx]
        if size in atom._expansions:
            return atom._expansions[size]
        if atom.unit_rule is None:
            raise ProfileError("no unit rule available")
        if atom.unit_rule[0] == "gamma":
            exp = self._gamma_expansion(atom, size)
        else:
            exp = self._peel_expansion(a_idx, size)
        atom._expansions[size] = exp
        return exp

    def _gamma_expansion(self, atom: Atom, k: int) -> Expansion:
        # vanishing of the k-th modified diagonal, solved for the small diagonal
        o = atom.algebra.zero_cycle
        unit = atom.algebra.unit
        out: Expansion = []
        for r in range(1, k):
            for J in itertools.combinations(range(1, k + 1), r):
                sign = Fraction((-1) ** (r + 1))
                rest = tuple(i for i in range(1, k + 1) if i not in J)
                for combo in itertools.product(
                        sorted(o.coeffs.items()), repeat=r):
                    coeff = sign
                    blocks = []
                    for i, (sym, c) in zip(J, combo):
                        coeff *= c
                        blocks.append(((i,), sym))
                    blocks.append((rest, unit))
                    blocks.sort(key=lambda t: t[0][0])
                    out.append((coeff, tuple(blocks)))
        return out

    def _peel_expansion(self, a_idx: int, k: int) -> Expansion:
        # Delta_{1..k} = Delta_{1..k-1} * Delta_{k-1,k}; expand and renormalize
        atom = self.atoms[a_idx]
        mini = _atom_profile(self, a_idx)
        prev = PowerClass(mini, k - 1,
                          {(key,): c for c, key in self._unit_expansion(a_idx, k - 1)})
        lifted = prev.pullback(list(range(1, k)), k)
        pair_blocks = [((k - 1, k), atom.algebra.unit)]
        pair_blocks += [((i,), atom.algebra.unit) for i in range(1, k - 1)]
        pair = PowerClass(mini, k, {(_sorted_atom_key(pair_blocks),): Fraction(1)})
        prod = lifted.multiply(pair).apply_relations()
        return [(c, key[0]) for key, c in prod.sorted_terms()]

    # -- io ----------------------------------------------------------------------

    def parse(self, text: str, m: Optional[int] = None) -> "PowerClass":
        return parse_cycle_text(self, text, m=m)


def _sorted_atom_key(blocks) -> AtomKey:
    return tuple(sorted(((tuple(sorted(b)), s) for b, s in blocks),
                        key=lambda t: t[0][0]))


def _atom_profile(profile: Profile, a_idx: int) -> Profile:
    """Single-atom view sharing the atom (and its expansion cache)."""
    if len(profile.atoms) == 1:
        return profile
    atom = profile.atoms[a_idx]
    view = getattr(atom, "_view_profile", None)
    if view is None:
        view = Profile([atom], name=atom.algebra.name)
        atom._view_profile = view
    return view


class PowerClass:
    """Rational combination of partition terms on a fixed power of the profile."""

    __slots__ = ("profile", "m", "terms")

    def __init__(self, profile: Profile, m: int, terms: Mapping[TermKey, Fraction]):
        self.profile = profile
        self.m = int(m)
        if self.m < 1:
            raise ProfileError("arity must be positive")
        self.terms: Dict[TermKey, Fraction] = {
            k: c for k, c in terms.items() if c != 0}
        if len(self.terms) > _term_cap():
            raise ResourceBoundError(
                f"term count {len(self.terms)} exceeds MOTIC_MAX_TERMS")

    # -- linear structure -------------------------------------------------------

    def _require_same(self, other: "PowerClass"):
        if other.profile is not self.profile or other.m != self.m:
            raise ProfileError("profile or arity mismatch")

    def __add__(self, other):
        self._require_same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return PowerClass(self.profile, self.m, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return PowerClass(self.profile, self.m,
                          {k: -c for k, c in self.terms.items()})

    def __rmul__(self, scalar):
        q = rat(scalar)
        return PowerClass(self.profile, self.m,
                          {k: q * c for k, c in self.terms.items()})

    def scale(self, scalar):
        return self.__rmul__(scalar)

    def __eq__(self, other):
        return (isinstance(other, PowerClass) and other.profile is self.profile
                and other.m == self.m and other.terms == self.terms)

    def __hash__(self):
        return hash((id(self.profile), self.m, tuple(sorted(self.terms.items()))))

    # -- core operations ---------------------------------------------------------

    def multiply(self, other: "PowerClass") -> "PowerClass":
        """Intersection product with excess correction on non-transverse joins."""
        self._require_same(other)
        out: Dict[TermKey, Fraction] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                for key, c in self._mul_term_pair(ka, kb):
                    out[key] = out.get(key, Fraction(0)) + ca * cb * c
        return PowerClass(self.profile, self.m, out)

    def _mul_term_pair(self, ka: TermKey, kb: TermKey):
        atom_options: List[List[Tuple[Fraction, AtomKey]]] = []
        for a_idx, atom in enumerate(self.profile.atoms):
            A = atom.algebra
            parent = list(range(self.m + 1))  # union-find over 1..m

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            def union(x, y):
                rx, ry = find(x), find(y)
                if rx != ry:
                    parent[ry] = rx

            for blocks in (ka[a_idx], kb[a_idx]):
                for b, _ in blocks:
                    for x in b[1:]:
                        union(b[0], x)
            members: Dict[int, List[int]] = {}
            for i in range(1, self.m + 1):
                members.setdefault(find(i), []).append(i)
            counts: Dict[int, List[int]] = {r: [0, 0] for r in members}
            joined_class: Dict[int, BaseClass] = {r: A.one() for r in members}
            dead = False
            for side, blocks in enumerate((ka[a_idx], kb[a_idx])):
                for b, sym in blocks:
                    r = find(b[0])
                    counts[r][side] += 1
                    joined_class[r] = joined_class[r] * A(sym)
            option_blocks: List[Tuple[Block, BaseClass]] = []
            for r, mem in members.items():
                excess = len(mem) + 1 - counts[r][0] - counts[r][1]
                cls = joined_class[r]
                if excess > 0:
                    cls = cls * A.c_top_power(excess)
                if cls.is_zero():
                    dead = True
                    break
                option_blocks.append((tuple(sorted(mem)), cls))
            if dead:
                atom_options = None
                break
            # distribute sparse block classes into single-symbol choices
            per_block_choices = []
            for b, cls in option_blocks:
                per_block_choices.append(
                    [(c, (b, s)) for s, c in sorted(cls.coeffs.items(),
                                                    key=lambda t: A.rank[t[0]])])
            combos = []
            for combo in itertools.product(*per_block_choices):
                coeff = Fraction(1)
                blocks = []
                for c, bs in combo:
                    coeff *= c
                    blocks.append(bs)
                combos.append((coeff, _sorted_atom_key(blocks)))
            atom_options.append(combos)
        if atom_options is None:
            return
        for combo in itertools.product(*atom_options):
            coeff = Fraction(1)
            key = []
            for c, akey in combo:
                coeff *= c
                key.append(akey)
            yield tuple(key), coeff

    def _mul_symbol_at(self, a_idx: int, i: int, z: BaseClass) -> "PowerClass":
        """Multiply the atom-a class of factor i by a base class (internal)."""
        A = self.profile.atoms[a_idx].algebra
        out: Dict[TermKey, Fraction] = {}
        for key, c in self.terms.items():
            blocks = list(key[a_idx])
            pos = next(j for j, (b, _) in enumerate(blocks) if i in b)
            b, sym = blocks[pos]
            prod = A(sym) * z
            for s2, c2 in prod.coeffs.items():
                nb = blocks[:pos] + [(b, s2)] + blocks[pos + 1:]
                nk = key[:a_idx] + (_sorted_atom_key(nb),) + key[a_idx + 1:]
                out[nk] = out.get(nk, Fraction(0)) + c * c2
        return PowerClass(self.profile, self.m, out)

    def pullback(self, J: Sequence[int], M: int) -> "PowerClass":
        """Relabel factors through an injective map; new factors carry units."""
        J = list(J)
        if len(J) != self.m or len(set(J)) != self.m:
            raise ProfileError("pull-back map must be injective on all factors")
        if any(not 1 <= j <= M for j in J):
            raise ProfileError("pull-back map out of range")
        mapping = {i + 1: J[i] for i in range(self.m)}
        extra = [j for j in range(1, M + 1) if j not in set(J)]
        out: Dict[TermKey, Fraction] = {}
        for key, c in self.terms.items():
            nk = []
            for a_idx, atom in enumerate(self.profile.atoms):
                blocks = [(tuple(sorted(mapping[i] for i in b)), s)
                          for b, s in key[a_idx]]
                blocks += [((j,), atom.algebra.unit) for j in extra]
                nk.append(_sorted_atom_key(blocks))
            out[tuple(nk)] = out.get(tuple(nk), Fraction(0)) + c
        return PowerClass(self.profile, M, out)

    def pushforward(self, keep: Iterable[int]) -> "PowerClass":
        """Projection to the kept factors.

        Factors are eliminated one at a time: a factor inside a larger block
        just leaves the block; a dropped singleton integrates its class when
        it has top codimension and kills the term otherwise.
        """
        keep = sorted(set(keep))
        if not keep:
            raise ProfileError("keep set must be nonempty")
        if any(not 1 <= i <= self.m for i in keep):
            raise ProfileError("keep set out of range")
        drop = [i for i in range(self.m, 0, -1) if i not in set(keep)]
        renum = {old: new + 1 for new, old in enumerate(keep)}
        out: Dict[TermKey, Fraction] = {}
        for key, c in self.terms.items():
            coeff = c
            atoms_blocks = [list(ak) for ak in key]
            dead = False
            for t in drop:
                for a_idx, atom in enumerate(self.profile.atoms):
                    A = atom.algebra
                    blocks = atoms_blocks[a_idx]
                    pos = next(j for j, (b, _) in enumerate(blocks) if t in b)
                    b, sym = blocks[pos]
                    if len(b) > 1:
                        blocks[pos] = (tuple(x for x in b if x != t), sym)
                    else:
                        if A.codim[sym] == A.n:
                            coeff *= A.degree.get(sym, Fraction(0))
                            if coeff == 0:
                                dead = True
                        else:
                            dead = True
                        if not dead:
                            blocks.pop(pos)
                    if dead:
                        break
                if dead:
                    break
            if dead:
                continue
            nk = tuple(
                _sorted_atom_key([(tuple(renum[i] for i in b), s)
                                  for b, s in blocks])
                for blocks in atoms_blocks)
            out[nk] = out.get(nk, Fraction(0)) + coeff
        return PowerClass(self.profile, len(keep), out)

    def permute(self, sigma) -> "PowerClass":
        """Relabel factor i to sigma(i) (sigma a dict or 1-based list)."""
        if not isinstance(sigma, dict):
            sigma = {i + 1: s for i, s in enumerate(sigma)}
        if sorted(sigma) != list(range(1, self.m + 1)) or \
                sorted(sigma.values()) != list(range(1, self.m + 1)):
            raise ProfileError("not a permutation of the factors")
        out: Dict[TermKey, Fraction] = {}
        for key, c in self.terms.items():
            nk = tuple(
                _sorted_atom_key([(tuple(sorted(sigma[i] for i in b)), s)
                                  for b, s in ak])
                for ak in key)
            out[nk] = out.get(nk, Fraction(0)) + c
        return PowerClass(self.profile, self.m, out)

    def integrate(self) -> Fraction:
        """Total degree; nonzero only for terms of full codimension."""
        total = Fraction(0)
        for key, c in self.terms.items():
            val = c
            for a_idx, atom in enumerate(self.profile.atoms):
                A = atom.algebra
                for _, sym in key[a_idx]:
                    if A.codim[sym] != A.n:
                        val = Fraction(0)
                        break
                    val *= A.degree.get(sym, Fraction(0))
                if val == 0:
                    break
            total += val
        return total

    def term_codimension(self, key: TermKey) -> int:
        total = 0
        for a_idx, atom in enumerate(self.profile.atoms):
            A = atom.algebra
            for b, sym in key[a_idx]:
                total += A.n * (len(b) - 1) + A.codim[sym]
        return total

    def codimension_components(self) -> Dict[int, "PowerClass"]:
        out: Dict[int, Dict[TermKey, Fraction]] = {}
        for key, c in self.terms.items():
            r = self.term_codimension(key)
            out.setdefault(r, {})[key] = c
        return {r: PowerClass(self.profile, self.m, t) for r, t in sorted(out.items())}

    def is_homogeneous(self) -> bool:
        return len(self.codimension_components()) <= 1

    # -- rewriting ----------------------------------------------------------------

    def apply_relations(self, trace: Optional[list] = None,
                        order: str = "standard") -> "PowerClass":
        """Rewrite to the profile's normal form (fixpoint of all declared rules)."""
        queue: List[Tuple[TermKey, Fraction]] = list(self.terms.items())
        out: Dict[TermKey, Fraction] = {}
        steps = 0
        while queue:
            key, coeff = queue.pop()
            redex = self._find_redex(key, order)
            if redex is None:
                out[key] = out.get(key, Fraction(0)) + coeff
                continue
            steps += 1
            if trace is not None and steps <= 200:
                trace.append(
                    f"rewrite {describe_redex(self.profile, key, redex)}")
            for nk, c in self._rewrite_step(key, redex):
                queue.append((nk, coeff * c))
            if len(queue) > _term_cap():
                raise ResourceBoundError("rewriting exceeded MOTIC_MAX_TERMS")
        return PowerClass(self.profile, self.m, out)

    def _find_redex(self, key: TermKey, order: str):
        atoms = range(len(self.profile.atoms))
        for a_idx in atoms:
            atom = self.profile.atoms[a_idx]
            blocks = key[a_idx] if order == "standard" else tuple(reversed(key[a_idx]))
            for b, sym in blocks:
                if len(b) < 2:
                    continue
                if sym in atom.rules:
                    return (a_idx, b, sym, "rule")
                if atom.has_unit_rule_for(len(b)):
                    return (a_idx, b, sym, "unit")
        return None

    def _rewrite_step(self, key: TermKey, redex):
        a_idx, b, sym, kind = redex
        atom = self.profile.atoms[a_idx]
        A = atom.algebra
        rest = [bs for bs in key[a_idx] if bs != (b, sym)]
        if kind == "rule":
            rhs = atom.rules[sym]
            if len(b) == 2:
                for c, u, v in rhs:
                    nb = rest + [((b[0],), u), ((b[1],), v)]
                    yield key[:a_idx] + (_sorted_atom_key(nb),) + key[a_idx + 1:], c
            else:
                tail = b[1:]
                for c, u, v in rhs:
                    nb = rest + [((b[0],), u), (tail, v)]
                    yield key[:a_idx] + (_sorted_atom_key(nb),) + key[a_idx + 1:], c
            return
        # whole-block decomposition of the small diagonal on the block's factors
        expansion = self.profile._unit_expansion(a_idx, len(b))
        relabel = {i + 1: b[i] for i in range(len(b))}
        for c, akey in expansion:
            blocks = [(tuple(sorted(relabel[i] for i in eb)), es) for eb, es in akey]
            if sym != A.unit:
                # multiply the block's class back in at its least factor
                pos = next(j for j, (eb, _) in enumerate(blocks) if b[0] in eb)
                eb, es = blocks[pos]
                prod = A(es) * A(sym)
                for s2, c2 in prod.coeffs.items():
                    nb = rest + blocks[:pos] + [(eb, s2)] + blocks[pos + 1:]
                    yield (key[:a_idx] + (_sorted_atom_key(nb),) + key[a_idx + 1:],
                           c * c2)
            else:
                nb = rest + blocks
                yield key[:a_idx] + (_sorted_atom_key(nb),) + key[a_idx + 1:], c

    def is_zero(self) -> bool:
        return not self.apply_relations().terms

    def same(self, other: "PowerClass") -> bool:
        return (self - other).is_zero()

    def is_completely_decomposable(self, extended: bool = False) -> bool:
        """Strictly: no diagonal blocks at all; extended: pair blocks allowed."""
        nf = self.apply_relations()
        limit = 2 if extended else 1
        for key in nf.terms:
            for ak in key:
                for b, _ in ak:
                    if len(b) > limit:
                        return False
        return True

    def sorted_terms(self):
        def rank_key(item):
            key, _ = item
            return tuple(
                tuple((b, atom.algebra.rank[s]) for b, s in ak)
                for atom, ak in zip(self.profile.atoms, key))
        return sorted(self.terms.items(), key=rank_key)

    def text(self) -> str:
        return render_cycle_text(self)

    def __repr__(self):
        return f"<PowerClass m={self.m}: {self.text()}>"


# ---------------------------------------------------------------------------
# operations mirroring the module surface
# ---------------------------------------------------------------------------

def diagonal_push(profile: Profile, z, m: int) -> PowerClass:
    return profile.diagonal_push(z, m)


def multiply(a: PowerClass, b: PowerClass) -> PowerClass:
    return a.multiply(b)


def pullback(a: PowerClass, J: Sequence[int], M: int) -> PowerClass:
    return a.pullback(J, M)


def pushforward(a: PowerClass, keep: Iterable[int]) -> PowerClass:
    return a.pushforward(keep)


def apply_relations(a: PowerClass, trace=None, order="standard") -> PowerClass:
    return a.apply_relations(trace=trace, order=order)


def permute(a: PowerClass, sigma) -> PowerClass:
    return a.permute(sigma)


def integrate(a: PowerClass) -> Fraction:
    return a.integrate()


def is_zero(a: PowerClass) -> bool:
    return a.is_zero()


def codimension_components(a: PowerClass) -> Dict[int, PowerClass]:
    return a.codimension_components()


def external_product(product_profile: Profile, a: PowerClass, b: PowerClass) -> PowerClass:
    """Kuenneth embedding of a pair of classes into a product profile.

    The product profile's atoms must be exactly the operands' atoms in order.
    """
    if a.m != b.m:
        raise ProfileError("arities differ")
    if tuple(a.profile.atoms) + tuple(b.profile.atoms) != product_profile.atoms:
        raise ProfileError("product profile does not match the factors")
    out: Dict[TermKey, Fraction] = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            out[ka + kb] = out.get(ka + kb, Fraction(0)) + ca * cb
    return PowerClass(product_profile, a.m, out)


# ---------------------------------------------------------------------------
# profile constructors
# ---------------------------------------------------------------------------

def _ci_closed_form(algebra: BaseAlgebra, j: int) -> List[Tuple[Fraction, str, str]]:
    # (1/d) sum_l D^{n+j-l} x D^l, truncated above codimension n
    n = algebra.n
    d = algebra.metadata["d"]
    syms = ["1"] + [f"D^{k}" for k in range(1, n + 1)]
    out = []
    for l in range(j, n + 1):
        if n + j - l <= n:
            out.append((Fraction(1, d), syms[n + j - l], syms[l]))
    return out


def dual_tensor_sum(algebra: BaseAlgebra) -> List[Tuple[Fraction, str, str]]:
    """Rank-one tensors of the natural projectors away from the middle.

    For codimension r != n/2 the dual-basis projector is the pairing inverse
    contracted against b_{n-r} x b_r; summing over r gives the class whose
    complement in the diagonal is the middle projector.
    """
    n = algebra.n
    out: List[Tuple[Fraction, str, str]] = []
    for r in range(n + 1):
        if 2 * r == n:
            continue
        rows = algebra.basis[n - r]
        cols = algebra.basis[r]
        # pairing P[l][j] = deg(b_{r,l} * b_{n-r,j}); need its inverse
        P = [[(algebra(bl) * algebra(bj)).integrate() for bj in rows]
             for bl in cols]
        Pinv = _invert(P)
        if Pinv is None:
            raise AlgebraError(
                f"Poincare pairing degenerate in codimension {r}")
        for jdx, bj in enumerate(rows):
            for ldx, bl in enumerate(cols):
                c = Pinv[jdx][ldx]
                if c != 0:
                    out.append((c, bj, bl))
    return out


def _invert(matrix):
    size = len(matrix)
    if size == 0:
        return []
    aug = [row[:] + [Fraction(int(i == j)) for j in range(size)]
           for i, row in enumerate(matrix)]
    for col in range(size):
        piv = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def _small_diagonal_expansion(algebra: BaseAlgebra,
                              rules: Mapping[str, Sequence]) -> Expansion:
    """Decomposition of the triple small diagonal from the cube relation.

    Derived from the vanishing of the middle-cube component of the triple
    diagonal: Delta_123 equals the signed sum of mixed diagonal/dual-tensor
    contractions.  Valid whenever the natural decomposition is multiplicative.
    """
    temp = Profile([Atom(algebra, rules=rules)], name="_tmp")
    acc: Dict[TermKey, Fraction] = {}
    for c, u, v in dual_tensor_sum(algebra):
        key = (_sorted_atom_key([((1,), u), ((2,), v)]),)
        acc[key] = acc.get(key, Fraction(0)) + c
    rho = PowerClass(temp, 2, acc)
    delta2 = temp.small_diagonal(2)
    delta3 = temp.small_diagonal(3)
    total = temp.zero(3)
    for S in range(1, 8):
        slots = [rho if S & (1 << t) else delta2 for t in range(3)]
        sign = Fraction((-1) ** (bin(S).count("1") + 1))
        piece = _contract_slots(delta3, slots)
        total = total + sign * piece
    total = total.apply_relations()
    return [(c, key[0]) for key, c in total.sorted_terms()]


def _contract_slots(z: PowerClass, slots: Sequence[PowerClass]) -> PowerClass:
    """(f_1 x ... x f_k)_* z via stepwise contraction of one factor at a time."""
    k = z.m
    if len(slots) != k:
        raise ProfileError("need one correspondence per factor")
    w = z.pullback(list(range(1, k + 1)), 2 * k)
    for f in slots:
        w = w.multiply(f.pullback([1, k + 1], w.m))
        w = w.pushforward([i for i in range(2, w.m + 1)])
        w = w.apply_relations()
    return w


def make_ci_profile(n: int, ambient_dim: int, degrees: Sequence[int], *,
                    k0="auto", small_diagonal="auto", name: Optional[str] = None,
                    c_top_override=None, weighted: bool = False) -> Profile:
    """Complete-intersection profile with decomposability threshold ``k0``.

    ``k0`` is the least power of the hyperplane class whose diagonal
    push-forward is declared completely decomposable; the default is the
    codimension e = ambient_dim - n, which always holds for complete
    intersections in ordinary projective space.  Pass ``k0=None`` for a fully
    formal profile with no rules.  ``small_diagonal`` controls whether whole
    small-diagonal blocks decompose (the multiplicative case); by default it
    is on exactly when k0 <= 1.
    """
    algebra = make_hypersurface_algebra(n, ambient_dim, degrees, name=name,
                                        c_top_override=c_top_override,
                                        weighted=weighted)
    e = ambient_dim - n
    if k0 == "auto":
        k0 = e
    rules: Dict[str, List[Tuple[Fraction, str, str]]] = {}
    if k0 is not None:
        for j in range(max(0, k0), n + 1):
            sym = "1" if j == 0 else f"D^{j}"
            rules[sym] = _ci_closed_form(algebra, j)
    if small_diagonal == "auto":
        small_diagonal = k0 is not None and 0 < k0 <= 1
    unit_rule = None
    if small_diagonal:
        if k0 is None or k0 > 1:
            raise ProfileError(
                "small-diagonal decomposition needs delta(D) decomposable (k0 <= 1)")
        if k0 >= 1:
            unit_rule = ("ci", _small_diagonal_expansion(algebra, rules))
        # k0 == 0 already rewrites unit blocks through the closed form
    prof = Profile([Atom(algebra, rules=rules, unit_rule=unit_rule)],
                   name=name or algebra.name)
    return prof


def make_curve_profile(g: int, points: Sequence[str] = ("o",), *,
                       my_vanishing: bool = True, name: Optional[str] = None,
                       c_top_override=None) -> Profile:
    """Curve profile; point classes push to products, genus rules optional.

    Each named point is an honest closed point, so its diagonal push-forward
    is the product of copies of itself.  With ``my_vanishing`` the modified
    diagonal classes vanish from g+2 factors on, which encodes the sharp
    genus bound for the defect sweep; switch it off for the strictly formal
    model where no diagonal of the curve ever decomposes.
    """
    algebra = make_curve_algebra(g, points, name=name,
                                 c_top_override=c_top_override)
    rules = {p: [(Fraction(1), p, p)] for p in points}
    unit_rule = None
    if g == 0:
        o = points[0]
        rules["1"] = [(Fraction(1), "1", o), (Fraction(1), o, "1")]
    elif my_vanishing:
        unit_rule = ("gamma", g + 2)
    return Profile([Atom(algebra, rules=rules, unit_rule=unit_rule)],
                   name=name or algebra.name)


def make_point_profile(name: str = "point") -> Profile:
    algebra = make_point_algebra(name)
    rules = {"1": [(Fraction(1), "1", "1")]}
    return Profile([Atom(algebra, rules=rules)], name=name)


def make_split_profile(algebra: BaseAlgebra, *, rules=None,
                       small_diagonal: bool = False,
                       name: Optional[str] = None) -> Profile:
    """Profile over a validated split algebra with explicit rules."""
    unit_rule = None
    if small_diagonal:
        unit_rule = ("ci", _small_diagonal_expansion(algebra, rules or {}))
    return Profile([Atom(algebra, rules=rules or {}, unit_rule=unit_rule)],
                   name=name or algebra.name)


# ---------------------------------------------------------------------------
# the normative cycle text grammar
# ---------------------------------------------------------------------------
#   class  := "0" | term (" + " term)*
#   term   := coeff (" * " part)*
#   part   := [ "a" INT ":" ] ("d"|"s") "{" int ("," int)* "}" "[" symbol "]"
# Singletons print as s{i}[sym], diagonal blocks as d{i,j,...}[sym]; on
# product profiles every part carries its atom prefix "a0:", "a1:", ...

def render_cycle_text(pc: PowerClass) -> str:
    if not pc.terms:
        return "0"
    multi = len(pc.profile.atoms) > 1
    out = []
    for key, coeff in pc.sorted_terms():
        parts = [rat_str(coeff)]
        for a_idx, ak in enumerate(key):
            prefix = f"a{a_idx}:" if multi else ""
            for b, sym in ak:
                tag = "d" if len(b) > 1 else "s"
                parts.append(f"{prefix}{tag}{{{','.join(map(str, b))}}}[{sym}]")
        out.append(" * ".join(parts))
    return " + ".join(out)


def parse_cycle_text(profile: Profile, text: str,
                     m: Optional[int] = None) -> PowerClass:
    text = text.strip()
    if text == "0":
        if m is None:
            raise ProfileError("cannot infer arity of the zero class")
        return profile.zero(m)
    raw_terms = []
    for chunk in text.split(" + "):
        pieces = [p.strip() for p in chunk.split(" * ")]
        coeff = rat(pieces[0])
        parts = []
        for p in pieces[1:]:
            a_idx = 0
            if p.startswith("a"):
                colon = p.index(":")
                a_idx = int(p[1:colon])
                p = p[colon + 1:]
            if p[0] not in "ds" or "{" not in p or "[" not in p:
                raise ProfileError(f"malformed cycle term part {p!r}")
            body = p[p.index("{") + 1:p.index("}")]
            block = tuple(sorted(int(x) for x in body.split(",")))
            sym = p[p.index("[") + 1:p.rindex("]")]
            parts.append((a_idx, block, sym))
        raw_terms.append((coeff, parts))
    arity = m
    if arity is None:
        arity = max(max(max(b) for _, b, _ in parts)
                    for _, parts in raw_terms)
    terms: Dict[TermKey, Fraction] = {}
    for coeff, parts in raw_terms:
        per_atom: List[List[Tuple[Block, str]]] = [[] for _ in profile.atoms]
        for a_idx, block, sym in parts:
            if a_idx >= len(profile.atoms):
                raise ProfileError(f"atom index {a_idx} out of range")
            profile.atoms[a_idx].algebra._check_symbol(sym)
            per_atom[a_idx].append((block, sym))
        key = []
        for a_idx, atom in enumerate(profile.atoms):
            blocks = per_atom[a_idx]
            covered = sorted(i for b, _ in blocks for i in b)
            missing = [i for i in range(1, arity + 1) if i not in covered]
            if len(covered) != len(set(covered)):
                raise ProfileError("overlapping blocks in cycle term")
            blocks += [((i,), atom.algebra.unit) for i in missing]
            key.append(_sorted_atom_key(blocks))
        k = tuple(key)
        terms[k] = terms.get(k, Fraction(0)) + coeff
    return PowerClass(profile, arity, terms)


def describe_redex(profile: Profile, key: TermKey, redex) -> str:
    a_idx, b, sym, kind = redex
    prefix = f"a{a_idx}:" if len(profile.atoms) > 1 else ""
    return f"{kind} at {prefix}d{{{','.join(map(str, b))}}}[{sym}]"
