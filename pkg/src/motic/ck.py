"""Chow-Kuenneth projector sets and the induced grading of power Chow groups."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .base import AlgebraError, ProfileError
from .corr import (Correspondence, act, act_tensor, compose, corr_external,
                   identity, tensor, transpose)
from .power import PowerClass, Profile, dual_tensor_sum, external_product


class CKVerificationError(ValueError):
    """Raised when a constructor-built projector set fails verification."""


class CKSet:
    """An indexed family pi_0 .. pi_{2n} of projectors of X, X = profile."""

    def __init__(self, profile: Profile, projectors: Sequence[Correspondence],
                 self_dual: bool, name: str = "ck"):
        self.profile = profile
        self.projectors: Tuple[Correspondence, ...] = tuple(projectors)
        self.n = profile.n
        if len(self.projectors) != 2 * self.n + 1:
            raise ProfileError(
                f"need 2n+1 = {2 * self.n + 1} projectors, got {len(self.projectors)}")
        self.self_dual = self_dual
        self.name = name

    def __getitem__(self, k: int) -> Correspondence:
        return self.projectors[k]

    def __len__(self) -> int:
        return len(self.projectors)

    def indices(self) -> range:
        return range(2 * self.n + 1)

    def to_json(self) -> dict:
        return {"name": self.name, "self_dual": self.self_dual,
                "projectors": [p.text() for p in self.projectors]}


def verify_ck(ck: CKSet) -> dict:
    """Check sum-to-diagonal, idempotence, orthogonality and self-duality.

    The cohomological Kuenneth lifting is out of scope for this engine and is
    reported as unchecked.  Failures are reported, not raised.
    """
    delta = identity(ck.profile)
    total = ck.profile.zero(2)
    for p in ck.projectors:
        total = total + p.pc
    residual = (total - delta.pc).apply_relations()
    report = {
        "sum_to_diagonal": residual.is_zero(),
        "sum_residual": residual.text(),
        "idempotence": {},
        "orthogonality": {},
        "self_duality": None,
        "kunneth_lifting": "not checked: cohomological statement out of scope",
    }
    nonzero = [k for k in ck.indices() if not ck[k].pc.apply_relations().is_zero()]
    for k in nonzero:
        diff = (compose(ck[k], ck[k]).pc - ck[k].pc).apply_relations()
        report["idempotence"][str(k)] = diff.is_zero()
    for i in nonzero:
        for j in nonzero:
            if i < j:
                c1 = compose(ck[i], ck[j]).pc.apply_relations()
                c2 = compose(ck[j], ck[i]).pc.apply_relations()
                report["orthogonality"][f"{i},{j}"] = c1.is_zero() and c2.is_zero()
    if ck.self_dual:
        ok = True
        detail = {}
        for k in ck.indices():
            diff = (transpose(ck[k]).pc - ck[2 * ck.n - k].pc).apply_relations()
            if not diff.is_zero():
                ok = False
                detail[str(k)] = diff.text()
        report["self_duality"] = ok
        if detail:
            report["self_duality_failures"] = detail
    report["passed"] = bool(
        report["sum_to_diagonal"]
        and all(report["idempotence"].values())
        and all(report["orthogonality"].values())
        and (report["self_duality"] is not False))
    return report


def _require_verified(ck: CKSet):
    report = verify_ck(ck)
    if not report["passed"]:
        failing = {k: v for k, v in report.items()
                   if k not in ("kunneth_lifting", "sum_residual")}
        raise CKVerificationError(f"projector verification failed: {failing}")


def natural_ci_projectors(profile: Profile, verify: bool = True) -> CKSet:
    """The natural self-dual set of a complete-intersection or split profile.

    Even projectors away from the middle come from the Poincare-dual basis;
    odd ones vanish; the middle absorbs the diagonal remainder.  For curve
    profiles this specializes to the one-point construction.
    """
    if len(profile.atoms) != 1:
        raise ProfileError("natural projectors need a single-atom profile "
                           "(use product_ck for products)")
    algebra = profile.atoms[0].algebra
    kind = algebra.metadata.get("kind")
    if kind == "curve":
        o = algebra.metadata["points"][0]
        return curve_projectors(profile, o, o, verify=verify)
    if kind == "point":
        return CKSet(profile, [identity(profile)], self_dual=True,
                     name=f"natural({profile.name})")
    n = algebra.n
    rank_one: Dict[int, List[Tuple[Fraction, str, str]]] = {}
    for c, u, v in dual_tensor_sum(algebra):
        r = algebra.codim[v]
        rank_one.setdefault(r, []).append((c, u, v))
    projectors: List[Correspondence] = []
    middle_acc = identity(profile).pc
    for k in range(2 * n + 1):
        if k == n:
            projectors.append(None)  # filled after the loop
            continue
        if k % 2 == 1 or (k // 2) not in rank_one:
            projectors.append(Correspondence(profile.zero(2), 1, 1))
            continue
        terms = {}
        for c, u, v in rank_one[k // 2]:
            key = ((((1,), u), ((2,), v)),)
            terms[key] = terms.get(key, Fraction(0)) + c
        pc = PowerClass(profile, 2, terms)
        projectors.append(Correspondence(pc, 1, 1))
        middle_acc = middle_acc - pc
    projectors[n] = Correspondence(middle_acc, 1, 1)
    ck = CKSet(profile, projectors, self_dual=True,
               name=f"natural({profile.name})")
    if verify:
        _require_verified(ck)
    return ck


def curve_projectors(profile: Profile, left_point: str, right_point: str,
                     verify: bool = True) -> CKSet:
    """pi_0 = o_left x X, pi_2 = X x o_right, pi_1 the remainder."""
    if len(profile.atoms) != 1:
        raise ProfileError("curve projectors need a single-atom profile")
    algebra = profile.atoms[0].algebra
    if algebra.metadata.get("kind") != "curve":
        raise ProfileError("curve projectors need a curve profile")
    for p in (left_point, right_point):
        algebra._check_symbol(p)
        if algebra.codim[p] != 1 or algebra.degree.get(p) != 1:
            raise ProfileError(f"{p!r} is not a degree-one point class")
    pi0 = profile.factor_class(2, 1, algebra(left_point))
    pi2 = profile.factor_class(2, 2, algebra(right_point))
    pi1 = identity(profile).pc - pi0 - pi2
    ck = CKSet(profile,
               [Correspondence(pi0, 1, 1), Correspondence(pi1, 1, 1),
                Correspondence(pi2, 1, 1)],
               self_dual=(left_point == right_point),
               name=f"curve({profile.name},{left_point},{right_point})")
    if verify:
        _require_verified(ck)
    return ck


def product_ck(ck1: CKSet, ck2: CKSet, product_profile: Profile,
               verify: bool = True) -> CKSet:
    """Product projectors pi_k = sum_{i+j=k} pi_i (x) pi_j on a product profile."""
    if tuple(ck1.profile.atoms) + tuple(ck2.profile.atoms) != product_profile.atoms:
        raise ProfileError("product profile does not match the factor profiles")
    n1, n2 = ck1.n, ck2.n
    projectors = []
    for k in range(2 * (n1 + n2) + 1):
        acc = product_profile.zero(2)
        for i in range(max(0, k - 2 * n2), min(2 * n1, k) + 1):
            j = k - i
            piece = corr_external(product_profile, ck1[i], ck2[j])
            acc = acc + piece.pc
        projectors.append(Correspondence(acc, 1, 1))
    ck = CKSet(product_profile, projectors,
               self_dual=ck1.self_dual and ck2.self_dual,
               name=f"product({ck1.name},{ck2.name})")
    if verify:
        _require_verified(ck)
    return ck


def power_grading_projector(ck: CKSet, m: int, ell: int) -> Correspondence:
    """The projector of X^m in total Kuenneth degree ell."""
    if not 0 <= ell <= 2 * m * ck.n:
        raise ProfileError("grading degree out of range")
    acc = ck.profile.zero(2 * m)
    for tup in _tuples_with_sum(2 * ck.n, m, ell):
        t = ck[tup[0]]
        for k in tup[1:]:
            t = tensor(t, ck[k])
        perm = _interleave_to_block(m)
        acc = acc + t.pc.permute(perm)
    return Correspondence(acc, m, m)


def _interleave_to_block(m: int) -> Dict[int, int]:
    # iterated tensor() yields source/target factor order s1..sm t1..tm already
    return {i: i for i in range(1, 2 * m + 1)}


def _tuples_with_sum(maxval: int, length: int, total: int):
    if length == 1:
        if 0 <= total <= maxval:
            yield (total,)
        return
    for first in range(max(0, total - maxval * (length - 1)),
                       min(maxval, total) + 1):
        for rest in _tuples_with_sum(maxval, length - 1, total - first):
            yield (first,) + rest


def chow_grading(ck: CKSet, z: PowerClass, r: int) -> Dict[int, PowerClass]:
    """Graded pieces s -> (pi_{2r-s} of the power)_* z of a codim-r class."""
    if z.profile is not ck.profile:
        raise ProfileError("class lives on a different profile")
    comps = z.codimension_components()
    if list(comps) not in ([], [r]):
        raise ProfileError(f"class is not homogeneous of codimension {r}")
    m = z.m
    out: Dict[int, PowerClass] = {}
    for ell in range(0, 2 * m * ck.n + 1):
        s = 2 * r - ell
        acc = ck.profile.zero(m)
        for tup in _tuples_with_sum(2 * ck.n, m, ell):
            acc = acc + act_tensor([ck[k] for k in tup], z)
        acc = acc.apply_relations()
        if acc.terms:
            out[s] = acc
    return out
