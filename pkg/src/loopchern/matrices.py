"""Dense complex matrix kernel: exponential, eigenvalues, linear solve.

All routines target small fibers (n <= 8 in every shipped scenario) and
accept stacked input: an array of shape (..., n, n) is a batch of matrices
and the computation broadcasts over the leading axes.  numpy supplies
array storage and arithmetic only; the exponential (Pade order 13 with
scaling and squaring), the linear solver (Gaussian elimination with
partial pivoting) and the eigenvalue routine (Householder reduction to
Hessenberg form, then shifted QR with deflation) are implemented in this
module so no external decomposition routine is ever called.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError

_EPS = np.finfo(float).eps

# Numerator/denominator coefficients of the degree-13 Pade approximant to
# exp, scaled so the constant term is exactly 1: exp(0) then evaluates to the
# identity bit-exactly and long products of trivial factors do not drift.
_PADE13_RAW = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
)
_PADE13 = tuple(c / _PADE13_RAW[0] for c in _PADE13_RAW)
_THETA13 = 5.371920351148152


def _require_square(a: np.ndarray) -> int:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}")
    return a.shape[-1]


def _require_finite(a: np.ndarray, context: str) -> None:
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise NumericalError(f"non-finite entries in {context}")


def one_norm(a) -> float:
    """Largest 1-norm (max column sum) over the batch."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=-2).max())


def solve(a, b) -> np.ndarray:
    """Solve a @ x = b by Gaussian elimination with partial pivoting.

    Broadcasts over leading axes; ``b`` must carry a trailing (n, k) block.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    n = _require_square(a)
    if b.ndim < 2 or b.shape[-2] != n:
        raise DimensionError(f"rhs shape {b.shape} does not match system size {n}")
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    nrhs = b.shape[-1]
    af = np.broadcast_to(a, batch + (n, n)).reshape(-1, n, n).copy()
    bf = np.broadcast_to(b, batch + (n, nrhs)).reshape(-1, n, nrhs).copy()
    m = af.shape[0]
    rows = np.arange(m)
    for k in range(n):
        piv = k + np.argmax(np.abs(af[:, k:, k]), axis=1)
        swap = piv != k
        if np.any(swap):
            tmp = af[rows, piv].copy()
            af[rows, piv] = af[rows, k]
            af[rows, k] = tmp
            tmp = bf[rows, piv].copy()
            bf[rows, piv] = bf[rows, k]
            bf[rows, k] = tmp
        pk = af[:, k, k]
        if np.any(np.abs(pk) == 0.0):
            raise NumericalError("singular system in solve")
        if k + 1 < n:
            fac = af[:, k + 1:, k] / pk[:, None]
            af[:, k + 1:, k:] -= fac[:, :, None] * af[:, k, None, k:]
            bf[:, k + 1:, :] -= fac[:, :, None] * bf[:, k, None, :]
    x = np.zeros_like(bf)
    for k in range(n - 1, -1, -1):
        acc = bf[:, k, :]
        if k + 1 < n:
            acc = acc - np.einsum("bj,bjr->br", af[:, k, k + 1:], x[:, k + 1:, :])
        x[:, k, :] = acc / af[:, k, k, None]
    return x.reshape(batch + (n, nrhs))


def mat_exp(m) -> np.ndarray:
    """Matrix exponential by Pade-13 with scaling and squaring.

    Relative accuracy is ~1e-13 for one-norms up to ~50; the squaring count
    is shared across a batch (taken from the largest norm) so batched calls
    stay deterministic.
    """
    a = np.array(m, dtype=complex)
    n = _require_square(a)
    _require_finite(a, "mat_exp input")
    norm = one_norm(a)
    s = 0
    if norm > _THETA13:
        s = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / (2.0 ** s)
    b = _PADE13
    eye = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
    r = solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    _require_finite(r, "mat_exp result")
    return r


def _eig2(a: np.ndarray) -> list[complex]:
    """Eigenvalues of a 2x2 block by the (stabilized) quadratic formula."""
    t = 0.5 * (a[0, 0] + a[1, 1])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = np.sqrt(complex(t * t - det))
    lam1 = t + disc if abs(t + disc) >= abs(t - disc) else t - disc
    lam2 = det / lam1 if lam1 != 0 else t - disc
    return [complex(lam1), complex(lam2)]


def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = a.astype(complex).copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        nx = np.sqrt(float((np.abs(x) ** 2).sum()))
        if nx <= _EPS * max(1.0, one_norm(h)):
            continue
        v = x
        phase = x[0] / abs(x[0]) if abs(x[0]) > 0 else 1.0
        v[0] += phase * nx
        v = v / np.sqrt(float((np.abs(v) ** 2).sum()))
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
    return h


def _wilkinson_shift(block: np.ndarray) -> complex:
    lams = _eig2(block)
    corner = block[1, 1]
    return min(lams, key=lambda lam: abs(lam - corner))


def _qr_step(h: np.ndarray, lo: int, hi: int, mu: complex) -> None:
    """One explicit shifted QR sweep on the active Hessenberg block, in place."""
    m = hi - lo + 1
    blk = h[lo:hi + 1, lo:hi + 1] - mu * np.eye(m, dtype=complex)
    givens = []
    for k in range(m - 1):
        aa, bb = blk[k, k], blk[k + 1, k]
        r = np.hypot(abs(aa), abs(bb))
        if r == 0.0:
            c, s = 1.0 + 0j, 0.0 + 0j
        else:
            c, s = aa / r, bb / r
        givens.append((c, s))
        rot = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        blk[k:k + 2, k:] = rot @ blk[k:k + 2, k:]
    for k, (c, s) in enumerate(givens):
        rot_h = np.array([[c, -np.conj(s)], [s, np.conj(c)]])
        blk[:k + 2, k:k + 2] = blk[:k + 2, k:k + 2] @ rot_h
    h[lo:hi + 1, lo:hi + 1] = blk + mu * np.eye(m, dtype=complex)


def _eig_values(a: np.ndarray) -> list[complex]:
    n = a.shape[0]
    if n == 1:
        return [complex(a[0, 0])]
    if n == 2:
        return _eig2(a)
    h = _hessenberg(a)
    scale = max(one_norm(h), 1.0)
    eigs: list[complex] = []
    hi = n - 1
    stagnation = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(complex(h[0, 0]))
            break
        # deflation scan from the bottom of the active block
        lo = hi
        while lo > 0:
            off = abs(h[lo, lo - 1])
            if off <= _EPS * (abs(h[lo - 1, lo - 1]) + abs(h[lo, lo]) + _EPS * scale):
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(complex(h[hi, hi]))
            hi -= 1
            stagnation = 0
            continue
        if lo == hi - 1:
            eigs.extend(_eig2(h[lo:hi + 1, lo:hi + 1]))
            hi -= 2
            stagnation = 0
            continue
        stagnation += 1
        if stagnation > 40 * n:
            raise NumericalError("QR iteration failed to converge")
        if stagnation % 12 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])  # exceptional shift
        else:
            mu = _wilkinson_shift(h[hi - 1:hi + 1, hi - 1:hi + 1])
        _qr_step(h, lo, hi, mu)
    return eigs


def _sorted_complex(values) -> tuple[complex, ...]:
    return tuple(sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue multiset, stored sorted by (Re, Im)."""

    values: tuple[complex, ...]

    @classmethod
    def of(cls, values) -> "Spectrum":
        return cls(_sorted_complex(values))

    def __len__(self) -> int:
        return len(self.values)

    def matches(self, other: "Spectrum", tol: float = 1e-8) -> bool:
        return greedy_multiset_match(self.values, other.values,
                                     lambda x, y: abs(x - y), tol) is not None


def greedy_multiset_match(xs, ys, dist, tol: float):
    """Pair every x with a distinct y at distance <= tol, nearest first.

    Returns the list of index pairs or None.  Plain sorted pairwise
    comparison mis-pairs conjugate eigenvalues whose real parts differ by
    one ulp, so matching is done by nearest unused partner instead; for the
    well-separated multisets this package produces the two agree.
    """
    if len(xs) != len(ys):
        return None
    used = [False] * len(ys)
    pairs = []
    for i, x in enumerate(xs):
        best, best_d = -1, np.inf
        for j, y in enumerate(ys):
            if used[j]:
                continue
            d = dist(x, y)
            if d < best_d:
                best, best_d = j, d
        if best < 0 or best_d > tol:
            return None
        used[best] = True
        pairs.append((i, best))
    return pairs


def eig_multiset(m) -> Spectrum:
    """All eigenvalues with algebraic multiplicity, as a sorted multiset."""
    a = np.asarray(m, dtype=complex)
    n = _require_square(a)
    if a.ndim != 2:
        raise DimensionError("eig_multiset takes a single matrix, not a batch")
    _require_finite(a, "eig_multiset input")
    vals = _eig_values(a)
    if len(vals) != n:
        raise NumericalError("eigenvalue count mismatch")
    return Spectrum.of(vals)


def rank_probe(m, tol: float = 1e-9) -> int:
    """Numerical rank via pivoted row echelon reduction.

    Used to separate conjugacy classes that share a spectrum (Jordan
    structure probe rank(h - lam*I)).
    """
    a = np.array(m, dtype=complex)
    _require_square(a)
    n = a.shape[-1]
    scale = max(float(np.abs(a).max()) if a.size else 0.0, 1.0)
    rank = 0
    row = 0
    for col in range(n):
        piv = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[piv, col]) <= tol * scale:
            continue
        a[[row, piv]] = a[[piv, row]]
        a[row + 1:, col:] -= np.outer(a[row + 1:, col] / a[row, col], a[row, col:])
        rank += 1
        row += 1
        if row == n:
            break
    return rank


def block_diag(a, b) -> np.ndarray:
    """Block-diagonal sum along the trailing two axes."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    na, nb = _require_square(a), _require_square(b)
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    out = np.zeros(batch + (na + nb, na + nb), dtype=complex)
    out[..., :na, :na] = a
    out[..., na:, na:] = b
    return out


def kron(a, b) -> np.ndarray:
    """Kronecker product, row-major with the left factor outermost."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    na, nb = _require_square(a), _require_square(b)
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    out = np.einsum("...ij,...kl->...ikjl", np.broadcast_to(a, batch + (na, na)),
                    np.broadcast_to(b, batch + (nb, nb)))
    return out.reshape(batch + (na * nb, na * nb))
