"""Holonomy and shuffled iterated integrals with insertion slots.

The engine computes sums over all time-ordered placements of r insertion
factors among the transport factors of a loop, without truncating any
series.  The trick: adjoin commuting nilpotent markers eps_1..eps_r
(eps_q^2 = 0) and integrate the single transport equation

    U'(t) = U(t) . ( a(t) + sum_q eps_q m_q(t) ),      U(0) = 1,

over the algebra C[eps]/(eps_q^2).  Expanding the time-ordered product
shows the coefficient of eps_{q1}...eps_{qr} in U(1) is exactly the sum
over placements of those r insertions among the ordinary factors.  The
algebra embeds in block lower-triangular matrices (left regular
representation), so one matrix ODE does everything and the unit block is
the plain holonomy.

Integration uses a fourth-order commutator-free Magnus scheme: per step
two Gauss-node evaluations and two exponentials,

    U_{k+1} = U_k exp(h(a1 B1 + a2 B2)) exp(h(a2 B1 + a1 B2)),

which is exact for constant coefficients (each factor is then exp(hB))
and keeps the earliest-factor-leftmost time ordering.  Chart junctions
multiply in as transition-function factors at their subdivision boundary,
in the same order as the covering data prescribes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CapabilityError, ConfigurationError, IncompatibilityError
from .geometry import Loop
from .matrices import mat_exp

_SQRT3 = np.sqrt(3.0)
_C1, _C2 = 0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0
_A1, _A2 = 0.25 + _SQRT3 / 6.0, 0.25 - _SQRT3 / 6.0
_CHUNK = 256  # steps per exponential batch; fixed so results are deterministic

MAX_CHANNELS = 3
SCHEME = "cf4-gauss2"


@dataclass(frozen=True)
class InsertionChannel:
    """One insertion slot: a matrix-valued function of loop time.

    ``func(ts, chart)`` must return values of shape (len(ts), n, n), or
    (len(ts), S, n, n) when the transport is batched over S path
    parameters.  The chart index is passed because slot data built from
    curvature or A' must be expressed in the local trivialization that the
    transport factors use at those times.  Each channel is inserted with
    multiplicity one.
    """

    label: str
    func: Callable[[np.ndarray, int], np.ndarray]
    species: str = "other"   # "A'" marks the path-velocity slot


@dataclass(frozen=True)
class InsertionSpec:
    channels: tuple[InsertionChannel, ...] = ()

    def __post_init__(self):
        if len(self.channels) > MAX_CHANNELS:
            raise CapabilityError(
                f"at most {MAX_CHANNELS} insertion channels are supported")
        if sum(1 for c in self.channels if c.species == "A'") > 1:
            raise CapabilityError("at most one A' channel is allowed")

    @classmethod
    def of(cls, *channels: InsertionChannel) -> "InsertionSpec":
        return cls(tuple(channels))


@dataclass
class TransportResult:
    """Full transport value over the nilpotent algebra, plus metadata."""

    block: np.ndarray          # (*batch, M*n, M*n) block lower-triangular
    rank: int
    labels: tuple[str, ...]
    grid: int
    scheme: str = SCHEME

    @property
    def n_channels(self) -> int:
        return len(self.labels)

    def _index(self, subset) -> int:
        idx = 0
        for q in subset:
            q = self.labels.index(q) if isinstance(q, str) else int(q)
            idx |= 1 << q
        return idx

    def coeff(self, subset=()) -> np.ndarray:
        """Coefficient matrix of the monomial prod_{q in subset} eps_q."""
        i = self._index(subset)
        n = self.rank
        return self.block[..., i * n:(i + 1) * n, 0:n]

    def unit(self) -> np.ndarray:
        return self.coeff(())

    def monomials(self) -> dict[frozenset, np.ndarray]:
        """All coefficients, keyed by the set of channel labels."""
        out = {}
        for mask in range(1 << self.n_channels):
            subset = frozenset(self.labels[q] for q in range(self.n_channels)
                               if mask & (1 << q))
            out[subset] = self.coeff(tuple(subset))
        return out

    def trace(self, subset=()) -> np.ndarray:
        return np.trace(self.coeff(subset), axis1=-2, axis2=-1)

    def compose(self, later: "TransportResult") -> "TransportResult":
        """Algebra product: transport over a first range then a second."""
        if self.labels != later.labels or self.rank != later.rank:
            raise IncompatibilityError("cannot compose transports with different channels")
        return TransportResult(self.block @ later.block, self.rank, self.labels,
                               self.grid, self.scheme)


def _node_times(N: int) -> np.ndarray:
    k = np.arange(N, dtype=float)
    return np.stack([(k + _C1) / N, (k + _C2) / N], axis=1)


def _embed(unit: np.ndarray, chans: list[np.ndarray], m_blocks: int) -> np.ndarray:
    """Left regular representation of unit + sum_q eps_q chan_q."""
    n = unit.shape[-1]
    batch = unit.shape[:-2]
    out = np.zeros(batch + (m_blocks, n, m_blocks, n), dtype=complex)
    for i in range(m_blocks):
        out[..., i, :, i, :] = unit
    for q, ch in enumerate(chans):
        bit = 1 << q
        for j in range(m_blocks):
            if not j & bit:
                out[..., j | bit, :, j, :] = ch
    return out.reshape(batch + (m_blocks * n, m_blocks * n))


def _embed_scalar(g: np.ndarray, m_blocks: int) -> np.ndarray:
    """g acting as g * 1 in the algebra: block diagonal repetition."""
    return np.kron(np.eye(m_blocks), g)


def _ordered_product(factors: np.ndarray) -> np.ndarray:
    """Product factors[0] @ factors[1] @ ... by pairwise tree reduction."""
    while factors.shape[0] > 1:
        k = factors.shape[0]
        if k % 2:
            paired = np.matmul(factors[0:k - 1:2], factors[1:k:2])
            factors = np.concatenate([paired, factors[k - 1:k]], axis=0)
        else:
            factors = np.matmul(factors[0::2], factors[1::2])
    return factors[0]


def _normalize_channel_values(vals: np.ndarray, want_s: bool, n_s: int, n: int) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex)
    if vals.ndim == 3 and want_s:
        vals = np.broadcast_to(vals[:, None], (vals.shape[0], n_s, n, n))
    return vals


def transport(conn, loop: Loop, channels=(), s_nodes=None,
              step_range: tuple[int, int] | None = None,
              include_closing: bool | None = None) -> TransportResult:
    """Integrate the insertion transport of a connection around a loop.

    ``channels`` is an InsertionSpec or a sequence of InsertionChannel.
    ``s_nodes`` (shape (S,)) batches the integration over path parameters;
    the connection must then be a ConnectionPath.  ``step_range`` restricts
    to grid steps [start, end) without the closing transition factor, which
    is how transports over sub-arcs compose.
    """
    if conn.base != loop.base:
        raise IncompatibilityError("connection and loop live over different bases")
    spec = channels if isinstance(channels, InsertionSpec) else InsertionSpec.of(*channels)
    chans = spec.channels
    n = conn.rank
    r = len(chans)
    m_blocks = 1 << r
    mn = m_blocks * n
    N = loop.N
    per_seg = N // loop.p
    if include_closing is None:
        include_closing = step_range is None
    start, end = step_range if step_range is not None else (0, N)
    if not (0 <= start < end <= N):
        raise ConfigurationError(f"bad step range ({start}, {end}) for grid {N}")
    if conn.is_path and s_nodes is None:
        raise ConfigurationError("path transport needs s_nodes")
    svals = None if s_nodes is None else np.atleast_1d(np.asarray(s_nodes, dtype=float))
    batch = () if svals is None else (svals.size,)
    h = 1.0 / N
    nodes = _node_times(N)

    u = np.eye(mn, dtype=complex)
    if include_closing:
        g = conn.transition(loop.chart_of_segment(loop.p - 1), loop.chart_of_segment(0))
        u = _embed_scalar(g.eval(loop.eval(np.array([0.0]))[0].real), m_blocks)
    u = np.broadcast_to(u, batch + (mn, mn)).copy()

    for j in range(loop.p):
        s0 = max(start, j * per_seg)
        s1 = min(end, (j + 1) * per_seg)
        if s0 >= s1:
            continue
        chart = loop.chart_of_segment(j)
        if j > 0 and s0 == j * per_seg:
            g = conn.transition(loop.chart_of_segment(j - 1), chart)
            gv = g.eval(loop.eval(np.array([j / loop.p]))[0].real)
            u = u @ _embed_scalar(gv, m_blocks)
        comps = conn.local(chart)
        for c0 in range(s0, s1, _CHUNK):
            c1 = min(c0 + _CHUNK, s1)
            ts = nodes[c0:c1]                       # (k, 2)
            flat = ts.reshape(-1)
            coords = loop.eval(flat).real
            vel = loop.velocity(flat)
            k2 = flat.size
            unit = np.zeros((k2,) + batch + (n, n), dtype=complex)
            for mu, a_mu in enumerate(comps):
                vals = a_mu.eval(coords, svals) if conn.is_path else a_mu.eval(coords)
                unit += vals * vel[(slice(None), mu) + (None,) * (unit.ndim - 1)]
            ch_vals = [_normalize_channel_values(ch.func(flat, chart), svals is not None,
                                                 batch[0] if batch else 0, n)
                       for ch in chans]
            b = _embed(unit, ch_vals, m_blocks) if r else unit
            b = b.reshape((c1 - c0, 2) + batch + (mn, mn))
            z = np.stack([h * (_A1 * b[:, 0] + _A2 * b[:, 1]),
                          h * (_A2 * b[:, 0] + _A1 * b[:, 1])], axis=1)
            exps = mat_exp(z).reshape((2 * (c1 - c0),) + batch + (mn, mn))
            u = u @ _ordered_product(exps)
    return TransportResult(u, n, tuple(c.label for c in chans), N)


def holonomy(conn, loop: Loop) -> np.ndarray:
    """Path-ordered transport around the loop, with junction factors.

    Defined as the unit coefficient of the empty-insertion transport, so it
    shares every code path with the slotted integrals.
    """
    return transport(conn, loop).unit()


def shuffled_transport(conn, loop: Loop, ins: InsertionSpec,
                       s_nodes=None) -> TransportResult:
    """Transport with insertion slots; see the module docstring."""
    return transport(conn, loop, ins, s_nodes=s_nodes)
