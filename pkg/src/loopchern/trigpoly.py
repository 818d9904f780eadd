"""Matrix-valued trigonometric polynomials with polynomial s-dependence.

A term is a frequency vector m plus a list of matrix coefficients C_d and
stands for (sum_d C_d s^d) * exp(2 pi i m.x), where x runs over the chart
coordinates.  Connection data lives in this form because it is closed
under everything the engine does to it: coordinate derivatives, pointwise
products (curvature, gauge action), direct sums, Kronecker products, and
affine reparametrization in s.  No interpolation error enters anywhere;
evaluation at arbitrary points is exact up to rounding.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import DimensionError, IncompatibilityError

_TWO_PI_I = 2j * np.pi


def _coeff_array(value, rank: int) -> np.ndarray:
    """Normalize a coefficient to shape (sdeg+1, rank, rank)."""
    c = np.asarray(value, dtype=complex)
    if c.ndim == 2:
        c = c[None, :, :]
    if c.ndim != 3 or c.shape[-1] != rank or c.shape[-2] != rank:
        raise DimensionError(f"coefficient shape {c.shape} does not fit rank {rank}")
    return c


def _pad(c: np.ndarray, deg: int) -> np.ndarray:
    if c.shape[0] >= deg + 1:
        return c
    out = np.zeros((deg + 1,) + c.shape[1:], dtype=complex)
    out[: c.shape[0]] = c
    return out


class MatrixTrigPoly:
    """Finite sum of terms (polynomial in s) x exp(2 pi i m.x)."""

    __slots__ = ("ncoords", "rank", "terms")

    def __init__(self, ncoords: int, rank: int, terms=None):
        self.ncoords = int(ncoords)
        self.rank = int(rank)
        self.terms: dict[tuple[int, ...], np.ndarray] = {}
        if terms:
            for freq, coeff in (terms.items() if isinstance(terms, dict) else terms):
                self.add_term(freq, coeff)

    # -- construction -------------------------------------------------
    @classmethod
    def zero(cls, ncoords: int, rank: int) -> "MatrixTrigPoly":
        return cls(ncoords, rank)

    @classmethod
    def constant(cls, ncoords: int, matrix) -> "MatrixTrigPoly":
        m = np.asarray(matrix, dtype=complex)
        out = cls(ncoords, m.shape[-1])
        out.add_term((0,) * ncoords, m)
        return out

    @classmethod
    def identity(cls, ncoords: int, rank: int) -> "MatrixTrigPoly":
        return cls.constant(ncoords, np.eye(rank))

    def add_term(self, freq, coeff) -> None:
        key = tuple(int(f) for f in (freq if np.iterable(freq) else (freq,)))
        if len(key) != self.ncoords:
            raise DimensionError(f"frequency {key} has wrong arity for {self.ncoords} coords")
        c = _coeff_array(coeff, self.rank)
        if c.size == 0:
            return
        if key in self.terms:
            deg = max(self.terms[key].shape[0], c.shape[0]) - 1
            self.terms[key] = _pad(self.terms[key], deg) + _pad(c, deg)
        else:
            self.terms[key] = c.copy()

    def _pruned(self) -> "MatrixTrigPoly":
        self.terms = {m: c for m, c in self.terms.items() if np.abs(c).max() != 0.0}
        return self

    def copy(self) -> "MatrixTrigPoly":
        return MatrixTrigPoly(self.ncoords, self.rank,
                              {m: c.copy() for m, c in self.terms.items()})

    @property
    def sdeg(self) -> int:
        return max((c.shape[0] - 1 for c in self.terms.values()), default=0)

    # -- linear structure ---------------------------------------------
    def _check_like(self, other: "MatrixTrigPoly", same_rank=True) -> None:
        if self.ncoords != other.ncoords or (same_rank and self.rank != other.rank):
            raise IncompatibilityError("trig polynomials live over different structures")

    def __add__(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        self._check_like(other)
        out = self.copy()
        for m, c in other.terms.items():
            out.add_term(m, c)
        return out._pruned()

    def __sub__(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "MatrixTrigPoly":
        out = MatrixTrigPoly(self.ncoords, self.rank)
        for m, c in self.terms.items():
            out.terms[m] = scalar * c
        return out._pruned()

    def __neg__(self) -> "MatrixTrigPoly":
        return (-1.0) * self

    # -- products -------------------------------------------------------
    def _combine(self, other: "MatrixTrigPoly", f, rank_out: int) -> "MatrixTrigPoly":
        out = MatrixTrigPoly(self.ncoords, rank_out)
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                freq = tuple(a + b for a, b in zip(m1, m2))
                d1, d2 = c1.shape[0], c2.shape[0]
                conv = np.zeros((d1 + d2 - 1, rank_out, rank_out), dtype=complex)
                for i in range(d1):
                    for j in range(d2):
                        conv[i + j] += f(c1[i], c2[j])
                out.add_term(freq, conv)
        return out._pruned()

    def __matmul__(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        self._check_like(other)
        return self._combine(other, lambda a, b: a @ b, self.rank)

    def commutator(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        return self @ other - other @ self

    def kron(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        self._check_like(other, same_rank=False)
        return self._combine(other, np.kron, self.rank * other.rank)

    def block_diag(self, other: "MatrixTrigPoly") -> "MatrixTrigPoly":
        self._check_like(other, same_rank=False)
        na, nb = self.rank, other.rank
        out = MatrixTrigPoly(self.ncoords, na + nb)
        for m, c in self.terms.items():
            full = np.zeros((c.shape[0], na + nb, na + nb), dtype=complex)
            full[:, :na, :na] = c
            out.add_term(m, full)
        for m, c in other.terms.items():
            full = np.zeros((c.shape[0], na + nb, na + nb), dtype=complex)
            full[:, na:, na:] = c
            out.add_term(m, full)
        return out._pruned()

    # -- calculus -------------------------------------------------------
    def dcoord(self, mu: int) -> "MatrixTrigPoly":
        """Derivative with respect to chart coordinate mu (exact)."""
        out = MatrixTrigPoly(self.ncoords, self.rank)
        for m, c in self.terms.items():
            if m[mu] != 0:
                out.terms[m] = (_TWO_PI_I * m[mu]) * c
        return out

    def ds(self) -> "MatrixTrigPoly":
        """Derivative with respect to the path parameter s (exact)."""
        out = MatrixTrigPoly(self.ncoords, self.rank)
        for m, c in self.terms.items():
            if c.shape[0] > 1:
                d = np.arange(1, c.shape[0], dtype=float)
                out.terms[m] = c[1:] * d[:, None, None]
        return out._pruned()

    def subs_affine_s(self, shift: float, scale: float) -> "MatrixTrigPoly":
        """Reparametrize s -> shift + scale * s (exact binomial expansion)."""
        out = MatrixTrigPoly(self.ncoords, self.rank)
        for m, c in self.terms.items():
            deg = c.shape[0] - 1
            new = np.zeros_like(c)
            for d in range(deg + 1):
                for k in range(d + 1):
                    new[k] += comb(d, k) * (shift ** (d - k)) * (scale ** k) * c[d]
            out.add_term(m, new)
        return out._pruned()

    def at_s(self, s: float) -> "MatrixTrigPoly":
        """Freeze the path parameter, returning an s-degree-0 polynomial."""
        out = MatrixTrigPoly(self.ncoords, self.rank)
        for m, c in self.terms.items():
            powers = float(s) ** np.arange(c.shape[0])
            out.add_term(m, np.tensordot(powers, c, axes=(0, 0)))
        return out._pruned()

    # -- evaluation -----------------------------------------------------
    def eval(self, x, s=None) -> np.ndarray:
        """Evaluate at chart points ``x`` and path parameters ``s``.

        ``x`` has shape (..., ncoords) (a bare (...,) array is accepted for
        one-coordinate charts).  If ``s`` is an array of shape (S,), the
        result has shape (*x.shape[:-1], S, rank, rank); a scalar or absent
        ``s`` adds no axis.
        """
        x = np.asarray(x, dtype=float)
        if self.ncoords == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.ncoords:
            raise DimensionError(f"point shape {x.shape} does not match {self.ncoords} coords")
        xbatch = x.shape[:-1]
        s_arr = None
        if s is not None:
            s_arr = np.asarray(s, dtype=float)
            if s_arr.ndim == 0:
                s_arr = None
                s_scalar = float(s)
        sshape = (s_arr.shape if s_arr is not None else ())
        out = np.zeros(xbatch + sshape + (self.rank, self.rank), dtype=complex)
        for m, c in self.terms.items():
            phase = np.exp(_TWO_PI_I * (x @ np.asarray(m, dtype=float)))
            deg = c.shape[0] - 1
            if deg == 0:
                coeff = c[0]
            elif s_arr is not None:
                powers = s_arr[None, :] ** np.arange(deg + 1)[:, None]
                coeff = np.tensordot(powers, c, axes=(0, 0))
            elif s is not None:
                coeff = np.tensordot(s_scalar ** np.arange(deg + 1), c, axes=(0, 0))
            else:
                raise DimensionError("s-dependent polynomial evaluated without s")
            phase_b = phase.reshape(xbatch + (1,) * len(sshape) + (1, 1))
            out = out + phase_b * coeff
        return out

    def approx_eq(self, other: "MatrixTrigPoly", tol: float = 1e-12) -> bool:
        diff = self - other
        return max((np.abs(c).max() for c in diff.terms.values()), default=0.0) <= tol
