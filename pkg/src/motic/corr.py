"""Correspondence algebra over the power ring.

A correspondence from the a-th power to the b-th power is a cycle class on
the (a+b)-th power; source factors come first, then target factors.  All the
usual operations (composition by convolution, transpose, tensor product,
action on cycle classes) are implemented through pull-back, intersection
product and push-forward, with the profile's relations applied afterwards.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .base import ProfileError
from .power import PowerClass, Profile, external_product


class Correspondence:
    """A cycle on X^{a+b} regarded as an operator from X^a to X^b."""

    __slots__ = ("pc", "a", "b")

    def __init__(self, pc: PowerClass, a: int, b: int):
        if pc.m != a + b:
            raise ProfileError(f"class has arity {pc.m}, expected {a}+{b}")
        self.pc = pc
        self.a = a
        self.b = b

    @property
    def profile(self) -> Profile:
        return self.pc.profile

    def __add__(self, other):
        self._require_like(other)
        return Correspondence(self.pc + other.pc, self.a, self.b)

    def __sub__(self, other):
        self._require_like(other)
        return Correspondence(self.pc - other.pc, self.a, self.b)

    def __neg__(self):
        return Correspondence(-self.pc, self.a, self.b)

    def __rmul__(self, scalar):
        return Correspondence(scalar * self.pc, self.a, self.b)

    def _require_like(self, other):
        if not isinstance(other, Correspondence) or \
                (other.a, other.b) != (self.a, self.b) or \
                other.profile is not self.profile:
            raise ProfileError("correspondence shape mismatch")

    def is_zero(self) -> bool:
        return self.pc.is_zero()

    def same(self, other: "Correspondence") -> bool:
        self._require_like(other)
        return self.pc.same(other.pc)

    def text(self) -> str:
        return self.pc.text()

    def __repr__(self):
        return f"<Corr {self.a}->{self.b}: {self.pc.text()}>"


def identity(profile: Profile, a: int = 1) -> Correspondence:
    """The diagonal of X^a as the identity self-correspondence."""
    pc = profile.unit_class(2 * a)
    for i in range(1, a + 1):
        d = profile.small_diagonal(2).pullback([i, a + i], 2 * a)
        pc = pc.multiply(d)
    return Correspondence(pc, a, a)


def compose(f: Correspondence, g: Correspondence,
            rewrite: bool = True) -> Correspondence:
    """Convolution g after f: pull both to X^{a+b+c}, multiply, push out."""
    if f.b != g.a or f.profile is not g.profile:
        raise ProfileError("composition arity mismatch")
    a, b, c = f.a, f.b, g.b
    M = a + b + c
    lifted_f = f.pc.pullback(list(range(1, a + b + 1)), M)
    lifted_g = g.pc.pullback(list(range(a + 1, a + b + c + 1)), M)
    prod = lifted_f.multiply(lifted_g)
    keep = list(range(1, a + 1)) + list(range(a + b + 1, M + 1))
    out = prod.pushforward(keep)
    if rewrite:
        out = out.apply_relations()
    return Correspondence(out, a, c)


def transpose(f: Correspondence) -> Correspondence:
    sigma = {}
    for i in range(1, f.a + 1):
        sigma[i] = f.b + i
    for j in range(1, f.b + 1):
        sigma[f.a + j] = j
    return Correspondence(f.pc.permute(sigma), f.b, f.a)


def tensor(f: Correspondence, g: Correspondence) -> Correspondence:
    """Product correspondence; sources first in declaration order, then targets."""
    if f.profile is not g.profile:
        raise ProfileError("tensor needs a common profile")
    a, b, c, d = f.a, f.b, g.a, g.b
    M = a + b + c + d
    jf = list(range(1, a + 1)) + list(range(a + c + 1, a + c + b + 1))
    jg = list(range(a + 1, a + c + 1)) + list(range(a + c + b + 1, M + 1))
    lifted_f = f.pc.pullback(jf, M)
    lifted_g = g.pc.pullback(jg, M)
    return Correspondence(lifted_f.multiply(lifted_g), a + c, b + d)


def act(f: Correspondence, z: PowerClass, rewrite: bool = True) -> PowerClass:
    """Push-forward action of f on a cycle class of the source power."""
    if z.profile is not f.profile or z.m != f.a:
        raise ProfileError("class does not live on the source power")
    M = f.a + f.b
    lifted = z.pullback(list(range(1, f.a + 1)), M)
    prod = lifted.multiply(f.pc)
    out = prod.pushforward(list(range(f.a + 1, M + 1)))
    if rewrite:
        out = out.apply_relations()
    return out


def act_tensor(slots: Sequence[Correspondence], z: PowerClass,
               rewrite: bool = True, trace: Optional[list] = None) -> PowerClass:
    """(f_1 x ... x f_k)_* z for self-correspondences, one slot per factor.

    Contracts one source factor at a time, which keeps intermediate arities
    (and term counts) small compared to materializing the full tensor.
    """
    k = z.m
    if len(slots) != k:
        raise ProfileError("need one correspondence per factor")
    if any(s.a != 1 or s.b != 1 for s in slots):
        raise ProfileError("slot correspondences must be X -> X")
    w = z.pullback(list(range(1, k + 1)), 2 * k)
    if trace is not None:
        trace.append(f"lift {z.text()}")
    for t, f in enumerate(slots):
        w = w.multiply(f.pc.pullback([1, k + 1], w.m))
        w = w.pushforward(list(range(2, w.m + 1)))
        w = w.apply_relations()
        if trace is not None:
            trace.append(f"contract slot {t + 1}: {w.text()}")
    if rewrite:
        w = w.apply_relations(trace=trace)
    return w


def corr_external(product_profile: Profile, f: Correspondence,
                  g: Correspondence) -> Correspondence:
    """Kuenneth product of correspondences of equal shape on two factors."""
    if (f.a, f.b) != (g.a, g.b):
        raise ProfileError("external product needs equal shapes")
    pc = external_product(product_profile, f.pc, g.pc)
    return Correspondence(pc, f.a, f.b)


def is_idempotent(f: Correspondence) -> bool:
    if f.a != f.b:
        raise ProfileError("idempotence needs a self-correspondence")
    return compose(f, f).pc.same(f.pc)


def are_orthogonal(f: Correspondence, g: Correspondence) -> bool:
    if f.a != f.b or g.a != g.b or f.a != g.a:
        raise ProfileError("orthogonality needs self-correspondences of equal arity")
    return compose(f, g).is_zero() and compose(g, f).is_zero()
