"""Connections and paths of connections as chart-wise matrix 1-forms.

A connection is a matrix-valued trigonometric polynomial A_mu per chart
coordinate, together with transition functions on chart overlaps obeying
A_j = g^-1 A_i g + g^-1 dg.  Paths of connections carry polynomial
s-dependence in the same structures, so the s-derivative, the curvature
and every algebraic operation (direct sum, tensor product, gauge action)
stay inside the representation and are exact.
"""
from __future__ import annotations

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    GaugeError,
    IncompatibilityError,
)
from .geometry import BaseSpace
from .matrices import solve
from .trigpoly import MatrixTrigPoly

_COORD_NAMES = {"circle": ("t",), "torus2": ("x", "y")}


class TransitionMap:
    """Invertible matrix function attached to an ordered chart pair."""

    def __init__(self, pair: tuple[int, int], value: MatrixTrigPoly):
        self.pair = (int(pair[0]), int(pair[1]))
        self.value = value

    def eval(self, x) -> np.ndarray:
        return self.value.eval(x)

    def dcoord(self, mu: int) -> MatrixTrigPoly:
        return self.value.dcoord(mu)


class Gauge:
    """A global gauge transformation with an explicit trig-polynomial inverse."""

    def __init__(self, g: MatrixTrigPoly, g_inv: MatrixTrigPoly):
        if not (g @ g_inv).approx_eq(MatrixTrigPoly.identity(g.ncoords, g.rank), 1e-10):
            raise GaugeError("gauge and claimed inverse do not multiply to the identity")
        self.g = g
        self.g_inv = g_inv

    @classmethod
    def constant(cls, matrix, ncoords: int = 1) -> "Gauge":
        matrix = np.asarray(matrix, dtype=complex)
        n = matrix.shape[0]
        try:
            inv = solve(matrix, np.eye(n, dtype=complex))
        except Exception as exc:
            raise GaugeError("constant gauge matrix is singular") from exc
        return cls(MatrixTrigPoly.constant(ncoords, matrix),
                   MatrixTrigPoly.constant(ncoords, inv))

    @classmethod
    def phases(cls, freqs, ncoords: int = 1, coord: int = 0) -> "Gauge":
        """diag(exp(2 pi i f_k x_coord)) for integer frequencies f_k."""
        n = len(freqs)
        g = MatrixTrigPoly(ncoords, n)
        g_inv = MatrixTrigPoly(ncoords, n)
        for k, f in enumerate(freqs):
            e = np.zeros((n, n), dtype=complex)
            e[k, k] = 1.0
            key = [0] * ncoords
            key[coord] = int(f)
            g.add_term(tuple(key), e)
            g_inv.add_term(tuple(-v for v in key), e)
        return cls(g, g_inv)


class TwoFormValue:
    """Curvature value at a point: matrices R_{mu nu} for mu < nu."""

    def __init__(self, dim: int, rank: int, pairs: dict[tuple[int, int], np.ndarray]):
        self.dim = dim
        self.rank = rank
        self.pairs = pairs

    def matrix(self, mu: int, nu: int) -> np.ndarray:
        if mu == nu:
            return np.zeros((self.rank, self.rank), dtype=complex)
        if mu < nu:
            return self.pairs.get((mu, nu), np.zeros((self.rank, self.rank), complex))
        return -self.matrix(nu, mu)

    def apply(self, v, w) -> np.ndarray:
        v = np.asarray(v, dtype=complex).reshape(self.dim)
        w = np.asarray(w, dtype=complex).reshape(self.dim)
        out = np.zeros((self.rank, self.rank), dtype=complex)
        for (mu, nu), r in self.pairs.items():
            out += r * (v[mu] * w[nu] - v[nu] * w[mu])
        return out


class _ConnectionBase:
    """Shared structure of connections and connection paths."""

    is_path = False

    def __init__(self, base: BaseSpace, rank: int,
                 locals_: dict[int, list[MatrixTrigPoly]],
                 transitions: dict[tuple[int, int], TransitionMap] | None = None,
                 validate: bool = True):
        self.base = base
        self.rank = int(rank)
        self.locals = locals_
        self.transitions = transitions or {}
        for chart, comps in locals_.items():
            if len(comps) != base.dim:
                raise ConfigurationError(f"chart {chart} needs {base.dim} components")
            for c in comps:
                if c.rank != rank or c.ncoords != base.dim:
                    raise ConfigurationError("component shape mismatch")
        if validate:
            self._validate_transitions()

    def local(self, chart: int) -> list[MatrixTrigPoly]:
        try:
            return self.locals[chart]
        except KeyError:
            raise ConfigurationError(f"no local data for chart {chart}") from None

    def transition(self, i: int, j: int) -> MatrixTrigPoly:
        if i == j:
            return MatrixTrigPoly.identity(self.base.dim, self.rank)
        try:
            return self.transitions[(i, j)].value
        except KeyError:
            raise IncompatibilityError(f"missing transition for chart pair ({i},{j})") from None

    def _validate_transitions(self, tol_inv: float = 1e-10, tol_compat: float = 1e-9) -> None:
        for (i, j), tr in self.transitions.items():
            if (j, i) not in self.transitions:
                raise IncompatibilityError(f"transition ({j},{i}) missing")
            pts = self.base.overlap_points(i, j)
            gij = tr.value.eval(pts)
            gji = self.transitions[(j, i)].value.eval(pts)
            eye = np.eye(self.rank)
            if np.abs(gij @ gji - eye).max() > tol_inv:
                raise IncompatibilityError(f"transitions ({i},{j}) are not mutually inverse")
            if i in self.locals and j in self.locals:
                svals = np.array([0.0, 0.5, 1.0]) if self.is_path else None
                for mu in range(self.base.dim):
                    lhs = self._eval_component(j, mu, pts, svals)
                    ai = self._eval_component(i, mu, pts, svals)
                    dg = tr.dcoord(mu).eval(pts)
                    if svals is not None:
                        gij_b, gji_b, dg_b = gij[:, None], gji[:, None], dg[:, None]
                    else:
                        gij_b, gji_b, dg_b = gij, gji, dg
                    rhs = gji_b @ ai @ gij_b + gji_b @ dg_b
                    if np.abs(lhs - rhs).max() > tol_compat:
                        raise IncompatibilityError(
                            f"locals on charts {i},{j} violate the transition rule")

    def _eval_component(self, chart: int, mu: int, pts, svals):
        poly = self.locals[chart][mu]
        if svals is None:
            return poly.eval(pts)
        return poly.eval(pts, svals)

    def _map_locals(self, f) -> dict[int, list[MatrixTrigPoly]]:
        return {ch: [f(c) for c in comps] for ch, comps in self.locals.items()}


class Connection(_ConnectionBase):
    is_path = False


class ConnectionPath(_ConnectionBase):
    """Family of connections over s in [0, 1] with polynomial s-dependence.

    The s-derivative is taken analytically from the polynomial coefficients
    unless mode "fd" is requested, in which case central differences with
    step 1e-4 are used.
    """

    is_path = True
    FD_STEP = 1e-4

    def __init__(self, base, rank, locals_, transitions=None, validate=True,
                 s_mode: str = "analytic"):
        if s_mode not in ("analytic", "fd"):
            raise ConfigurationError(f"unknown s-derivative mode {s_mode!r}")
        self.s_mode = s_mode
        super().__init__(base, rank, locals_, transitions, validate)

    def at(self, s: float) -> Connection:
        return Connection(self.base, self.rank,
                          self._map_locals(lambda c: c.at_s(s)),
                          self.transitions, validate=False)

    def prime_polys(self, chart: int) -> list[MatrixTrigPoly]:
        if self.s_mode != "analytic":
            raise ConfigurationError("analytic s-derivative not available in fd mode")
        return [c.ds() for c in self.local(chart)]

    def prime_eval(self, chart: int, mu: int, x, s) -> np.ndarray:
        """A'_s component values; analytic when possible, else central in s."""
        poly = self.local(chart)[mu]
        if self.s_mode == "analytic":
            return poly.ds().eval(x, s)
        h = self.FD_STEP
        s = np.asarray(s, dtype=float)
        return (poly.eval(x, s + h) - poly.eval(x, s - h)) / (2.0 * h)

    def subpath(self, s0: float, s1: float) -> "ConnectionPath":
        """Affine restriction u -> s0 + (s1 - s0) u, exactly reparametrized."""
        return ConnectionPath(self.base, self.rank,
                              self._map_locals(lambda c: c.subs_affine_s(s0, s1 - s0)),
                              self.transitions, validate=False, s_mode=self.s_mode)


# -- curvature ----------------------------------------------------------

def curvature_polys(components: list[MatrixTrigPoly]) -> dict[tuple[int, int], MatrixTrigPoly]:
    """R_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu] for mu < nu (exact)."""
    dim = len(components)
    out = {}
    for mu in range(dim):
        for nu in range(mu + 1, dim):
            r = components[nu].dcoord(mu) - components[mu].dcoord(nu) \
                + components[mu].commutator(components[nu])
            out[(mu, nu)] = r
    return out


def curvature_at(conn: _ConnectionBase, chart: int, x, s: float | None = None,
                 analytic: bool = True, fd_step: float = 1e-5) -> TwoFormValue:
    """Curvature matrices at a chart point.

    The analytic route differentiates the trig-polynomial tables; the
    finite-difference route exists as an independent cross-check and uses
    central differences with the given step.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    chart_obj = conn.base.charts[chart]
    if chart_obj.arc is not None and not chart_obj.contains_values(x[:1]):
        raise DomainError(f"point {x} lies outside chart {chart}")
    comps = conn.local(chart)
    svals = None if s is None else float(s)
    if conn.is_path and s is None:
        raise ConfigurationError("curvature of a path needs an s value")

    def ev(poly, pt):
        return poly.eval(pt, svals) if conn.is_path else poly.eval(pt)

    pairs = {}
    for mu in range(conn.base.dim):
        for nu in range(mu + 1, conn.base.dim):
            if analytic:
                rpoly = curvature_polys(comps)[(mu, nu)]
                pairs[(mu, nu)] = ev(rpoly, x)
            else:
                emu = np.zeros(conn.base.dim)
                emu[mu] = fd_step
                enu = np.zeros(conn.base.dim)
                enu[nu] = fd_step
                d_mu_a_nu = (ev(comps[nu], x + emu) - ev(comps[nu], x - emu)) / (2 * fd_step)
                d_nu_a_mu = (ev(comps[mu], x + enu) - ev(comps[mu], x - enu)) / (2 * fd_step)
                amu, anu = ev(comps[mu], x), ev(comps[nu], x)
                pairs[(mu, nu)] = d_mu_a_nu - d_nu_a_mu + amu @ anu - anu @ amu
    return TwoFormValue(conn.base.dim, conn.rank, pairs)


# -- algebraic operations -------------------------------------------------

def _same_kind(c1, c2):
    if c1.base != c2.base:
        raise IncompatibilityError("connections live over different bases")
    if c1.is_path != c2.is_path:
        raise IncompatibilityError("cannot mix a connection with a path; promote first")


def _rebuild(c1, base, rank, locals_, transitions):
    if c1.is_path:
        return ConnectionPath(base, rank, locals_, transitions, validate=False,
                              s_mode=c1.s_mode)
    return Connection(base, rank, locals_, transitions, validate=False)


def direct_sum(c1, c2):
    """Block-diagonal sum of locals and transitions."""
    _same_kind(c1, c2)
    locals_ = {ch: [a.block_diag(b) for a, b in zip(c1.local(ch), c2.local(ch))]
               for ch in c1.locals}
    transitions = {pr: TransitionMap(pr, t.value.block_diag(c2.transitions[pr].value))
                   for pr, t in c1.transitions.items()}
    return _rebuild(c1, c1.base, c1.rank + c2.rank, locals_, transitions)


def tensor_product(c1, c2):
    """A (x) Id + Id (x) B on locals, g (x) h on transitions."""
    _same_kind(c1, c2)
    id1 = MatrixTrigPoly.identity(c1.base.dim, c1.rank)
    id2 = MatrixTrigPoly.identity(c2.base.dim, c2.rank)
    locals_ = {ch: [a.kron(id2) + id1.kron(b) for a, b in zip(c1.local(ch), c2.local(ch))]
               for ch in c1.locals}
    transitions = {pr: TransitionMap(pr, t.value.kron(c2.transitions[pr].value))
                   for pr, t in c1.transitions.items()}
    return _rebuild(c1, c1.base, c1.rank * c2.rank, locals_, transitions)


def gauge_apply(c, gauge: Gauge):
    """Global gauge action A -> g^-1 A g + g^-1 dg per chart."""
    if gauge.g.rank != c.rank:
        raise GaugeError("gauge rank does not match the connection")
    locals_ = {}
    for ch, comps in c.locals.items():
        locals_[ch] = [gauge.g_inv @ a @ gauge.g + gauge.g_inv @ gauge.g.dcoord(mu)
                       for mu, a in enumerate(comps)]
    transitions = {pr: TransitionMap(pr, gauge.g_inv @ t.value @ gauge.g)
                   for pr, t in c.transitions.items()}
    return _rebuild(c, c.base, c.rank, locals_, transitions)


def as_path(conn: Connection) -> ConnectionPath:
    """Promote a connection to the constant path (A'_s = 0)."""
    return ConnectionPath(conn.base, conn.rank,
                          {ch: [c.copy() for c in comps] for ch, comps in conn.locals.items()},
                          conn.transitions, validate=False)


def scale_s_path(conn: Connection) -> ConnectionPath:
    """The straight path s * A from the zero connection to A."""
    def ramp(poly: MatrixTrigPoly) -> MatrixTrigPoly:
        out = MatrixTrigPoly(poly.ncoords, poly.rank)
        for m, c in poly.terms.items():
            lifted = np.zeros((c.shape[0] + 1,) + c.shape[1:], dtype=complex)
            lifted[1:] = c
            out.add_term(m, lifted)
        return out
    return ConnectionPath(conn.base, conn.rank,
                          {ch: [ramp(c) for c in comps] for ch, comps in conn.locals.items()},
                          conn.transitions, validate=False)


def linear_path(c0: Connection, c1: Connection) -> ConnectionPath:
    """The affine path (1 - s) A0 + s A1."""
    _same_kind(c0, c1)
    locals_ = {}
    for ch in c0.locals:
        comps = []
        for a0, a1 in zip(c0.local(ch), c1.local(ch)):
            poly = MatrixTrigPoly(a0.ncoords, a0.rank)
            for m, c in a0.terms.items():
                poly.add_term(m, np.stack([c[0], -c[0]]))
            for m, c in a1.terms.items():
                poly.add_term(m, np.stack([np.zeros_like(c[0]), c[0]]))
            comps.append(poly)
        locals_[ch] = comps
    return ConnectionPath(c0.base, c0.rank, locals_, c0.transitions, validate=False)


def constant_diagonal_connection(logs) -> Connection:
    """diag(logs) dt on the trivial bundle over the one-chart circle."""
    logs = np.asarray(logs, dtype=complex)
    if logs.size == 0:
        raise ConfigurationError("need at least one diagonal entry")
    base = BaseSpace.circle("one")
    poly = MatrixTrigPoly.constant(1, np.diag(logs))
    return Connection(base, logs.size, {0: [poly]}, validate=False)


def split_two_chart(c, gauge: Gauge):
    """Re-present a one-chart circle connection over the two-chart atlas.

    Chart 0 keeps the original local form; chart 1 carries the gauge-moved
    form, and the supplied gauge becomes the transition g_{0,1}.
    """
    if c.base.kind != "circle" or len(c.base.charts) != 1:
        raise ConfigurationError("expected a one-chart circle connection")
    base2 = BaseSpace.circle("two")
    a0 = c.local(0)
    a1 = [gauge.g_inv @ a @ gauge.g + gauge.g_inv @ gauge.g.dcoord(0) for a in a0]
    transitions = {(0, 1): TransitionMap((0, 1), gauge.g),
                   (1, 0): TransitionMap((1, 0), gauge.g_inv)}
    locals_ = {0: [a.copy() for a in a0], 1: a1}
    if c.is_path:
        return ConnectionPath(base2, c.rank, locals_, transitions, s_mode=c.s_mode)
    return Connection(base2, c.rank, locals_, transitions)


# -- JSON schema -----------------------------------------------------------

def _terms_to_json(poly: MatrixTrigPoly) -> list[dict]:
    entries = []
    for (row, col) in [(r, c) for r in range(poly.rank) for c in range(poly.rank)]:
        terms = []
        for freq, coeff in sorted(poly.terms.items()):
            column = coeff[:, row, col]
            if np.abs(column).max() == 0.0:
                continue
            if coeff.shape[0] == 1:
                terms.append({"freq": list(freq),
                              "re": float(column[0].real), "im": float(column[0].imag)})
            else:
                terms.append({"freq": list(freq),
                              "s_poly": [{"re": float(v.real), "im": float(v.imag)}
                                         for v in column]})
        if terms:
            entries.append({"row": row, "col": col, "terms": terms})
    return entries


def _terms_from_json(entries: list[dict], ncoords: int, rank: int) -> MatrixTrigPoly:
    poly = MatrixTrigPoly(ncoords, rank)
    for entry in entries:
        row, col = int(entry["row"]), int(entry["col"])
        for term in entry["terms"]:
            freq = tuple(int(f) for f in term["freq"])
            if "s_poly" in term:
                col_vals = [complex(v["re"], v["im"]) for v in term["s_poly"]]
            else:
                col_vals = [complex(term.get("re", 0.0), term.get("im", 0.0))]
            coeff = np.zeros((len(col_vals), rank, rank), dtype=complex)
            for d, v in enumerate(col_vals):
                coeff[d, row, col] = v
            poly.add_term(freq, coeff)
    return poly


def connection_to_json(c) -> dict:
    coords = _COORD_NAMES[c.base.kind]
    out = {"base": c.base.kind, "rank": c.rank}
    chart_blocks = []
    for ch in sorted(c.locals):
        comps = [{"coord": coords[mu], "entries": _terms_to_json(poly)}
                 for mu, poly in enumerate(c.local(ch))]
        chart_blocks.append({"index": ch, "components": comps})
    if len(chart_blocks) == 1:
        out["charts"] = [{"index": chart_blocks[0]["index"]}]
        out["components"] = chart_blocks[0]["components"]
    else:
        out["charts"] = chart_blocks
    if c.transitions:
        out["transitions"] = [{"pair": list(pr), "entries": _terms_to_json(t.value)}
                              for pr, t in sorted(c.transitions.items())]
    if c.is_path:
        out["s_mode"] = c.s_mode
    return out


def connection_from_json(data: dict, validate: bool = True):
    kind = data["base"]
    if kind not in ("circle", "torus2"):
        raise ConfigurationError(f"unknown base {kind!r}")
    rank = int(data["rank"])
    charts = data.get("charts", [{"index": 0}])
    base = BaseSpace.torus2() if kind == "torus2" else \
        BaseSpace.circle("two" if len(charts) > 1 else "one")
    coords = _COORD_NAMES[kind]

    def parse_components(comp_list):
        by_coord = {c["coord"]: c["entries"] for c in comp_list}
        polys = []
        for name in coords:
            entries = by_coord.get(name, [])
            polys.append(_terms_from_json(entries, base.dim, rank))
        return polys

    locals_ = {}
    if "components" in data:
        locals_[int(charts[0]["index"])] = parse_components(data["components"])
    for chart in charts:
        if "components" in chart:
            locals_[int(chart["index"])] = parse_components(chart["components"])
    if not locals_:
        raise ConfigurationError("connection JSON has no components")
    transitions = {}
    for tr in data.get("transitions", []):
        pair = (int(tr["pair"][0]), int(tr["pair"][1]))
        transitions[pair] = TransitionMap(pair, _terms_from_json(tr["entries"], base.dim, rank))

    is_path = data.get("s_mode") is not None or \
        any(poly.sdeg > 0 for comps in locals_.values() for poly in comps)
    if is_path:
        return ConnectionPath(base, rank, locals_, transitions, validate=validate,
                              s_mode=data.get("s_mode", "analytic"))
    return Connection(base, rank, locals_, transitions, validate=validate)
