"""Spectral classes over the circle and their Grothendieck ring.

A rank-n bundle-with-connection over the circle is classified, up to the
equivalence generated by exactness of the odd loop form and bundle
isomorphism, by the multiset of logarithms of its holonomy eigenvalues
taken modulo 2 pi i.  This module realizes that multiset arithmetic:

  * SpectralClass     - multisets in C mod 2 pi i Z, exact (rational data)
                        or floating with a matching tolerance;
  * monoid_sum/star   - concatenation and pairwise-sum product, matching
                        direct sum and tensor product of connections;
  * LKElement         - formal differences in cancelled normal form, with
                        ring operations;
  * KHatElement       - the (rank, determinant-class) shadow in Z + C/Z;
  * i_map_eval        - evaluation on winding-k loop components, i.e.
                        sum_i exp(k a_i);
  * bcs_equivalent_s1 - the decision procedure comparing holonomy spectra,
                        with a matching certificate.

Exact mode stores a log as (re, turns): the value re + 2 pi i turns with
both entries rational, so ring laws can be checked by exact equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import IncompatibilityError, ModeError, SingularHolonomyError
from .geometry import make_circle_loop
from .matrices import eig_multiset, greedy_multiset_match, rank_probe
from .transport import holonomy

_TWO_PI = 2.0 * np.pi

EXACT = "exact"
FLOAT = "float"


def _canon_float(z: complex) -> complex:
    return complex(z.real, z.imag % _TWO_PI)


def _canon_exact(log: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    re, turns = Fraction(log[0]), Fraction(log[1])
    return (re, turns % 1)


def _circle_dist(a: complex, b: complex) -> float:
    dim = abs(a.imag - b.imag)
    return float(np.hypot(a.real - b.real, min(dim, _TWO_PI - dim)))


@dataclass(frozen=True)
class SpectralClass:
    """Multiset of holonomy-eigenvalue logarithms mod 2 pi i."""

    mode: str
    logs: tuple
    tol: float = 1e-8

    @classmethod
    def exact(cls, logs) -> "SpectralClass":
        canon = sorted(_canon_exact(l) for l in logs)
        return cls(EXACT, tuple(canon))

    @classmethod
    def floats(cls, values, tol: float = 1e-8) -> "SpectralClass":
        canon = sorted((_canon_float(complex(v)) for v in values),
                       key=lambda z: (z.real, z.imag))
        return cls(FLOAT, tuple(canon), tol)

    @property
    def rank(self) -> int:
        return len(self.logs)

    def as_complex(self) -> tuple[complex, ...]:
        if self.mode == FLOAT:
            return self.logs
        return tuple(complex(float(re), float(turns) * _TWO_PI) for re, turns in self.logs)

    def matches(self, other: "SpectralClass") -> bool:
        _require_same_mode(self, other)
        if self.rank != other.rank:
            return False
        if self.mode == EXACT:
            return self.logs == other.logs
        tol = max(self.tol, other.tol)
        return greedy_multiset_match(self.logs, other.logs, _circle_dist, tol) is not None

    def match_certificate(self, other: "SpectralClass"):
        """Matched log pairs, or the first unmatched value."""
        _require_same_mode(self, other)
        if self.mode == EXACT:
            return list(zip(self.logs, other.logs)) if self.logs == other.logs else None
        tol = max(self.tol, other.tol)
        if self.rank != other.rank:
            return None
        pairs = greedy_multiset_match(self.logs, other.logs, _circle_dist, tol)
        if pairs is None:
            return None
        return [(self.logs[i], other.logs[j]) for i, j in pairs]

    def log_sum(self):
        if self.mode == EXACT:
            re = sum((l[0] for l in self.logs), Fraction(0))
            turns = sum((l[1] for l in self.logs), Fraction(0))
            return (re, turns % 1)
        return _canon_float(sum(self.logs, 0.0 + 0.0j))


def _require_same_mode(x: SpectralClass, y: SpectralClass) -> None:
    if x.mode != y.mode:
        raise ModeError(f"cannot mix {x.mode} and {y.mode} spectral data")


def monoid_sum(x: SpectralClass, y: SpectralClass) -> SpectralClass:
    """Concatenation: the class of a direct sum."""
    _require_same_mode(x, y)
    if x.mode == EXACT:
        return SpectralClass.exact(x.logs + y.logs)
    return SpectralClass.floats(x.logs + y.logs, max(x.tol, y.tol))


def monoid_star(x: SpectralClass, y: SpectralClass) -> SpectralClass:
    """Pairwise sums a_i + b_j mod 2 pi i: the class of a tensor product.

    Holonomy eigenvalues multiply under tensor product, so their logs add;
    this is validated against the Kronecker holonomy route in the tests.
    """
    _require_same_mode(x, y)
    if x.mode == EXACT:
        return SpectralClass.exact(
            [(a[0] + b[0], a[1] + b[1]) for a in x.logs for b in y.logs])
    return SpectralClass.floats([a + b for a in x.logs for b in y.logs],
                                max(x.tol, y.tol))


def _cancel(plus: list, minus: list, mode: str, tol: float) -> tuple[tuple, tuple]:
    minus = list(minus)
    kept_plus = []
    for a in plus:
        hit = None
        for i, b in enumerate(minus):
            if (a == b) if mode == EXACT else (_circle_dist(a, b) <= tol):
                hit = i
                break
        if hit is None:
            kept_plus.append(a)
        else:
            minus.pop(hit)
    return tuple(kept_plus), tuple(minus)


@dataclass(frozen=True)
class LKElement:
    """Formal difference of spectral classes in cancelled normal form."""

    plus: SpectralClass
    minus: SpectralClass

    @classmethod
    def make(cls, plus: SpectralClass, minus: SpectralClass) -> "LKElement":
        _require_same_mode(plus, minus)
        tol = max(plus.tol, minus.tol)
        p, m = _cancel(list(plus.logs), list(minus.logs), plus.mode, tol)
        if plus.mode == EXACT:
            return cls(SpectralClass.exact(p), SpectralClass.exact(m))
        return cls(SpectralClass.floats(p, tol), SpectralClass.floats(m, tol))

    @classmethod
    def from_class(cls, x: SpectralClass) -> "LKElement":
        empty = SpectralClass.exact(()) if x.mode == EXACT \
            else SpectralClass.floats((), x.tol)
        return cls.make(x, empty)

    @property
    def mode(self) -> str:
        return self.plus.mode

    def is_zero(self) -> bool:
        return self.plus.rank == 0 and self.minus.rank == 0


def lk_add(a: LKElement, b: LKElement) -> LKElement:
    return LKElement.make(monoid_sum(a.plus, b.plus), monoid_sum(a.minus, b.minus))


def lk_neg(a: LKElement) -> LKElement:
    return LKElement(a.minus, a.plus)


def lk_sub(a: LKElement, b: LKElement) -> LKElement:
    return lk_add(a, lk_neg(b))


def lk_mul(a: LKElement, b: LKElement) -> LKElement:
    plus = monoid_sum(monoid_star(a.plus, b.plus), monoid_star(a.minus, b.minus))
    minus = monoid_sum(monoid_star(a.plus, b.minus), monoid_star(a.minus, b.plus))
    return LKElement.make(plus, minus)


def lk_eq(a: LKElement, b: LKElement) -> bool:
    """Equality in the Grothendieck group (valid without an auxiliary
    element because the underlying monoid is cancellative)."""
    return monoid_sum(a.plus, b.minus).matches(monoid_sum(b.plus, a.minus))


@dataclass(frozen=True)
class KHatElement:
    """Rank plus determinant class: the image in Z + C mod 2 pi i Z."""

    mode: str
    rank_part: int
    det_part: object   # exact: (Fraction, Fraction); float: complex
    tol: float = 1e-8

    def matches(self, other: "KHatElement") -> bool:
        if self.mode != other.mode:
            raise ModeError("cannot compare exact and float rank/det data")
        if self.rank_part != other.rank_part:
            return False
        if self.mode == EXACT:
            return self.det_part == other.det_part
        return _circle_dist(self.det_part, other.det_part) <= max(self.tol, other.tol)

    def add(self, other: "KHatElement") -> "KHatElement":
        det = (self.det_part[0] + other.det_part[0],
               (self.det_part[1] + other.det_part[1]) % 1) if self.mode == EXACT \
            else _canon_float(self.det_part + other.det_part)
        return KHatElement(self.mode, self.rank_part + other.rank_part, det,
                           max(self.tol, other.tol))

    def mul(self, other: "KHatElement") -> "KHatElement":
        """(n1, s1) (n2, s2) = (n1 n2, n1 s2 + n2 s1)."""
        if self.mode == EXACT:
            det = (self.rank_part * other.det_part[0] + other.rank_part * self.det_part[0],
                   (self.rank_part * other.det_part[1]
                    + other.rank_part * self.det_part[1]) % 1)
        else:
            det = _canon_float(self.rank_part * other.det_part
                               + other.rank_part * self.det_part)
        return KHatElement(self.mode, self.rank_part * other.rank_part, det,
                           max(self.tol, other.tol))


def to_khat(e: LKElement) -> KHatElement:
    rank = e.plus.rank - e.minus.rank
    sp, sm = e.plus.log_sum(), e.minus.log_sum()
    if e.mode == EXACT:
        det = (sp[0] - sm[0], (sp[1] - sm[1]) % 1)
    else:
        det = _canon_float(sp - sm)
    return KHatElement(e.mode, rank, det, max(e.plus.tol, e.minus.tol))


def i_map_eval(x: SpectralClass, k: int) -> complex:
    """Value on the winding-k loop component: sum_i exp(k a_i)."""
    return complex(sum(np.exp(k * a) for a in x.as_complex()))


def lk_i_map(e: LKElement, k: int) -> complex:
    return i_map_eval(e.plus, k) - i_map_eval(e.minus, k)


# -- holonomy input ----------------------------------------------------------

def class_from_holonomy(h, tol: float = 1e-8) -> SpectralClass:
    """Principal logs of the eigenvalue multiset, canonically reduced."""
    spec = eig_multiset(h)
    vals = []
    for lam in spec.values:
        if abs(lam) <= tol:
            raise SingularHolonomyError("holonomy has an eigenvalue too close to zero")
        vals.append(complex(np.log(abs(lam)), np.angle(lam) % _TWO_PI))
    return SpectralClass.floats(vals, tol)


@dataclass(frozen=True)
class DecisionResult:
    equivalent: bool
    class0: SpectralClass
    class1: SpectralClass
    certificate: object   # matched pairs, or a description of the obstruction

    def __bool__(self) -> bool:
        return self.equivalent


def _fundamental_loop(base, grid: int):
    return make_circle_loop(1, grid, atlas=base.atlas,
                            p=1 if base.atlas == "one" else 2)


def bcs_equivalent_s1(c0, c1, tol: float = 1e-8, grid: int = 256) -> DecisionResult:
    """Decide equality of the circle classes of two connections.

    The class is the holonomy log-spectrum mod 2 pi i, so the procedure
    computes both holonomies, takes eigenvalue logs and matches the
    multisets within the tolerance.
    """
    if c0.base.kind != "circle" or c1.base.kind != "circle":
        raise IncompatibilityError("the decision procedure works over the circle")
    if c0.rank != c1.rank:
        raise IncompatibilityError("connections have different ranks")
    c0_cls = class_from_holonomy(holonomy(c0, _fundamental_loop(c0.base, grid)), tol)
    c1_cls = class_from_holonomy(holonomy(c1, _fundamental_loop(c1.base, grid)), tol)
    cert = c0_cls.match_certificate(c1_cls)
    if cert is not None:
        return DecisionResult(True, c0_cls, c1_cls, cert)
    detail = {"class0": c0_cls.logs, "class1": c1_cls.logs,
              "reason": "log multisets do not match within tolerance"}
    return DecisionResult(False, c0_cls, c1_cls, detail)


@dataclass(frozen=True)
class ConjugacyProbe:
    same_spectrum: bool
    rank_pairs: tuple            # ((eigenvalue, rank0, rank1), ...)
    conjugate_possible: bool


def conjugacy_probe(h0, h1, tol: float = 1e-8) -> ConjugacyProbe:
    """Separate matrices sharing a spectrum by rank(h - lambda I).

    Equal spectra with different ranks certify non-conjugacy (different
    Jordan structure at that eigenvalue); equal ranks here do not prove
    conjugacy, they only fail to refute it at the first Jordan level.
    """
    h0 = np.asarray(h0, dtype=complex)
    h1 = np.asarray(h1, dtype=complex)
    s0, s1 = eig_multiset(h0), eig_multiset(h1)
    if not s0.matches(s1, tol * max(1.0, np.abs(h0).max())):
        return ConjugacyProbe(False, (), False)
    distinct = []
    for lam in s0.values:
        if all(abs(lam - mu) > 10 * tol for mu in distinct):
            distinct.append(lam)
    pairs = []
    possible = True
    eye = np.eye(h0.shape[0])
    for lam in distinct:
        r0 = rank_probe(h0 - lam * eye, tol)
        r1 = rank_probe(h1 - lam * eye, tol)
        pairs.append((lam, r0, r1))
        if r0 != r1:
            possible = False
    return ConjugacyProbe(True, tuple(pairs), possible)
