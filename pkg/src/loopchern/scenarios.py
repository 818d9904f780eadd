"""Scenario registry: named end-to-end verification runs.

Every scenario reads its inputs (matrices, grids, tolerances, seeds) from a
versioned JSON config shipped with the package, executes a fixed set of
two-sided checks through the library API, and returns a Report whose JSON
serialization is deterministic for a fixed config.  Engine failures inside
a check (singular holonomy, chart escapes) are captured as failed checks,
not crashes.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import loop_forms
from .circle_k import (
    SpectralClass,
    bcs_equivalent_s1,
    class_from_holonomy,
    conjugacy_probe,
    i_map_eval,
    lk_add,
    lk_eq,
    lk_mul,
    monoid_star,
    to_khat,
)
from .connections import (
    Connection,
    Gauge,
    connection_from_json,
    constant_diagonal_connection,
    scale_s_path,
    split_two_chart,
)
from .errors import EngineError, ScenarioLookupError
from .geometry import FourierField, LoopVariation, make_circle_loop, make_torus_loop
from .loop_forms import (
    DefectReport,
    FormQuery,
    bch_eval,
    bcs_eval,
    cs_eval,
    equivariant_defect,
    identity_checks,
    velocity_variation,
)
from .matrices import kron, mat_exp
from .transport import InsertionChannel, InsertionSpec, SCHEME, holonomy, transport


@dataclass
class ScenarioConfig:
    name: str
    params: dict = field(default_factory=dict)
    output_path: str | None = None

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        with open(path) as fh:
            data = json.load(fh)
        return cls(name=data["name"], params=data.get("params", {}),
                   output_path=data.get("output_path"))


@dataclass
class Report:
    scenario: str
    checks: list
    engine: dict
    params: dict
    timing_seconds: float
    csv_header: tuple | None = None
    csv_rows: list | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        # timing is intentionally not serialized: reports must be
        # bit-identical across runs of the same config
        return {
            "scenario": self.scenario,
            "engine": self.engine,
            "params": _jsonable(self.params),
            "checks": [c.as_json() for c in self.checks],
            "pass": self.passed,
        }

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if self.csv_rows is not None:
            csv_path = path[:-5] + ".csv" if path.endswith(".json") else path + ".csv"
            with open(csv_path, "w") as fh:
                fh.write(",".join(self.csv_header) + "\n")
                for row in self.csv_rows:
                    fh.write(",".join(repr(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _errored(identity: str, tol: float, exc: Exception) -> DefectReport:
    rep = DefectReport(identity, 0.0, 0.0, tol, note=f"errored: {exc}")
    rep.passed = False
    rep.defect = float("inf")
    return rep


def _guarded(checks: list, identity: str, tol: float, fn) -> None:
    try:
        out = fn()
    except EngineError as exc:
        checks.append(_errored(identity, tol, exc))
        return
    if isinstance(out, DefectReport):
        checks.append(out)
    else:
        checks.extend(out)


def _matrix(data) -> np.ndarray:
    return np.array([[complex(entry[0], entry[1]) for entry in row] for row in data])


def _variation(data, n_grid: int) -> LoopVariation:
    f = FourierField(int(data["dim"]))
    for term in data["terms"]:
        vec = np.zeros(f.dim, dtype=complex)
        vec[int(term["coord"])] = complex(term.get("re", 0.0), term.get("im", 0.0))
        f.add(int(term["freq"]), vec)
    return LoopVariation(f, n_grid)


def _loop_from(params: dict, n_grid: int):
    spec = params["loop"]
    if len(spec["winding"]) == 1:
        return make_circle_loop(spec["winding"][0], n_grid,
                                basepoint=spec.get("basepoint", [0.0])[0])
    return make_torus_loop(tuple(spec["winding"]), n_grid,
                           basepoint=tuple(spec.get("basepoint", (0.0, 0.0))))


def _scaled_connection(conn: Connection, factor: float) -> Connection:
    locals_ = {ch: [factor * c for c in comps] for ch, comps in conn.locals.items()}
    return Connection(conn.base, conn.rank, locals_, conn.transitions, validate=False)


def _tol(params: dict, key: str, default: float) -> float:
    if "tol" in params:
        return float(params["tol"])
    return float(params.get(key, default))


# --------------------------------------------------------------------------
# scenario runners
# --------------------------------------------------------------------------

def _run_ss61_ex1(p: dict):
    n = int(p["grid"])
    conn = connection_from_json(p["generator"])
    path = scale_s_path(conn)
    loop = make_circle_loop(1, n)
    checks = []
    h0 = holonomy(path.at(0.0), loop)
    h1 = holonomy(path.at(1.0), loop)
    expected = _matrix(p["expected_holonomy"])
    tol_h = _tol(p, "tol_holonomy", 1e-10)
    checks.append(DefectReport("holonomy-start", np.abs(h0 - np.eye(2)).max(), 0.0, tol_h))
    checks.append(DefectReport("holonomy-end", np.abs(h1 - expected).max(), 0.0, tol_h))
    val = bcs_eval(path, FormQuery.on_loop(loop, [velocity_variation(loop)]),
                   int(p["s_count"]))
    checks.append(DefectReport("bcs1-on-rotation-field", val, 0.0,
                               _tol(p, "tol_bcs", 1e-12)))
    _guarded(checks, "homotopy-degree-0", _tol(p, "tol_defect", 1e-10),
             lambda: equivariant_defect(path, loop, tol0=_tol(p, "tol_defect", 1e-10),
                                        s_count=int(p["s_count"])))
    dec = bcs_equivalent_s1(path.at(0.0), path.at(1.0), tol=float(p["tau"]), grid=n)
    checks.append(DefectReport("decision-equivalent", float(dec.equivalent), 1.0, 0.5,
                               note=f"matched logs: {dec.certificate}"))
    probe = conjugacy_probe(h0, h1)
    checks.append(DefectReport(
        "conjugacy-probe-non-conjugate",
        float(probe.same_spectrum and not probe.conjugate_possible), 1.0, 0.5,
        note=f"rank(h - lambda) pairs: {[(r0, r1) for _, r0, r1 in probe.rank_pairs]}"))
    return checks, {}


def _run_ss61_ex2(p: dict):
    n = int(p["grid"])
    alpha = float(p["alpha"])
    conn = _scaled_connection(connection_from_json(p["generator"]), alpha)
    path = scale_s_path(conn)
    loop = make_circle_loop(1, n)
    checks = []
    cs1 = cs_eval(path, FormQuery.on_base(0, [0.0], [np.array([1.0])]), int(p["s_count"]))
    checks.append(DefectReport("cs1-vanishes", cs1, 0.0, _tol(p, "tol_cs", 1e-12)))
    val = bcs_eval(path, FormQuery.on_loop(loop, [velocity_variation(loop)]),
                   int(p["s_count"]))
    expected = 2.0 * np.cos(alpha) - 2.0
    checks.append(DefectReport("iota-bcs1-value", val, expected, _tol(p, "tol_value", 1e-8)))
    _guarded(checks, "homotopy-degree-0", _tol(p, "tol_defect", 1e-8),
             lambda: equivariant_defect(path, loop, tol0=_tol(p, "tol_defect", 1e-8),
                                        s_count=int(p["s_count"])))
    dec = bcs_equivalent_s1(path.at(0.0), path.at(1.0), tol=float(p["tau"]), grid=n)
    checks.append(DefectReport("decision-not-equivalent", float(dec.equivalent), 0.0, 0.5,
                               note=str(dec.certificate)))
    return checks, {}


def _run_ss61_ex3(p: dict):
    n = int(p["grid"])
    conn = connection_from_json(p["generator"])
    path = scale_s_path(conn)
    loop = make_circle_loop(1, n)
    checks = []
    cs1 = cs_eval(path, FormQuery.on_base(0, [0.0], [np.array([1.0])]), int(p["s_count"]))
    checks.append(DefectReport("cs1-value", cs1, 4j * np.pi, _tol(p, "tol_cs", 1e-10)))
    tr1 = bch_eval(path.at(1.0), FormQuery.on_loop(loop))
    tr0 = bch_eval(path.at(0.0), FormQuery.on_loop(loop))
    checks.append(DefectReport("endpoint-traces-equal", tr1, tr0,
                               _tol(p, "tol_defect", 1e-8),
                               note="both holonomy traces equal 2"))
    _guarded(checks, "homotopy-degree-0", _tol(p, "tol_defect", 1e-8),
             lambda: equivariant_defect(path, loop, tol0=_tol(p, "tol_defect", 1e-8),
                                        s_count=int(p["s_count"])))
    return checks, {}


def _run_homotopy_s1(p: dict):
    grids = [int(g) for g in p.get("convergence_grids", [])] + [int(p["grid"])]
    conn = connection_from_json(p["connection"])
    path = scale_s_path(conn)
    checks = []
    rows = []
    for n in grids:
        loop = make_circle_loop(1, n)
        rep, = equivariant_defect(path, loop, tol0=_tol(p, "tol_defect", 1e-8),
                                  s_count=int(p["s_count"]))
        rows.append((n, rep.defect))
        if n == int(p["grid"]):
            checks.append(rep)
    return checks, {"csv_header": ("grid", "defect"), "csv_rows": rows}


def _run_homotopy_t2(p: dict):
    n = int(p["grid"])
    path = scale_s_path(connection_from_json(p["connection"]))
    loop = _loop_from(p, n)
    v = _variation(p["variation_v"], n)
    w = _variation(p["variation_w"], n)
    reports = equivariant_defect(path, loop, vectors=(v, w),
                                 tol0=_tol(p, "tol_defect0", 1e-8),
                                 tol2=_tol(p, "tol_defect2", 1e-4),
                                 h=float(p["fd_step"]), s_count=int(p["s_count"]))
    return reports, {}


def _run_subdivision(p: dict):
    n = int(p["grid"])
    p_sub = int(p["p"])
    refine = int(p["refine"])
    conn = connection_from_json(p["connection"])
    ins_mat = _matrix(p["insertion"])
    tol = _tol(p, "tol_invariance", 1e-9)
    checks = []

    def chan():
        return InsertionSpec.of(InsertionChannel(
            "m", lambda ts, chart: np.broadcast_to(ins_mat, (len(ts),) + ins_mat.shape)))

    res = {}
    for label, subdiv in (("coarse", p_sub), ("fine", p_sub * refine)):
        loop = make_circle_loop(1, n, p=subdiv)
        res[label] = transport(conn, loop, chan())
    checks.append(DefectReport(
        f"subdivision-holonomy-p{p_sub}-vs-p{p_sub * refine}",
        np.abs(res["coarse"].unit() - res["fine"].unit()).max(), 0.0, tol))
    checks.append(DefectReport(
        f"subdivision-insertion-p{p_sub}-vs-p{p_sub * refine}",
        np.abs(res["coarse"].coeff(("m",)) - res["fine"].coeff(("m",))).max(), 0.0, tol))

    two = split_two_chart(conn, Gauge.phases(p["gauge_freqs"]))
    n2 = int(p["grid_two_chart"])
    tr_one = np.trace(holonomy(conn, make_circle_loop(1, n2)))
    tr_two = np.trace(holonomy(two, make_circle_loop(1, n2, atlas="two", p=2)))
    checks.append(DefectReport("trivialization-one-vs-two-chart", tr_one, tr_two, tol))

    loop = make_circle_loop(1, n, p=p_sub)
    half = (n // (2 * p_sub)) * p_sub  # a step index inside the grid
    first = transport(conn, loop, chan(), step_range=(0, half))
    second = transport(conn, loop, chan(), step_range=(half, n))
    whole = transport(conn, loop, chan(), step_range=(0, n))
    checks.append(DefectReport(
        "composition-of-half-transports",
        np.abs(first.compose(second).block - whole.block).max(), 0.0,
        _tol(p, "tol_compose", 1e-10)))
    return checks, {}


def _run_gauge(p: dict):
    n = int(p["grid"])
    conn = connection_from_json(p["connection"])
    path = scale_s_path(conn)
    loop = make_circle_loop(1, n)
    gdot = velocity_variation(loop)
    rng = np.random.default_rng(int(p["seed"]))
    const = rng.standard_normal((conn.rank, conn.rank)) \
        + 1j * rng.standard_normal((conn.rank, conn.rank)) + 3.0 * np.eye(conn.rank)
    checks = []
    tol = _tol(p, "tol_gauge", 1e-8)
    for tag, gauge in (("phase", Gauge.phases(p["gauge_freqs"])),
                       ("constant", Gauge.constant(const))):
        for rep in identity_checks("gauge", conn=conn, path=path, gauge=gauge,
                                   loop=loop, v=gdot, tol=tol,
                                   s_count=int(p["s_count"])):
            rep.identity = f"{tag}-{rep.identity}"
            checks.append(rep)
    return checks, {}


def _run_restriction(p: dict):
    conn = connection_from_json(p["connection"])
    path = scale_s_path(conn)
    vectors = [_matrix([row])[0] for row in p["vectors"]]
    return identity_checks(
        "restriction", conn=conn, path=path, chart=0, point=tuple(p["point"]),
        base_vectors=vectors, loop_n=int(p["loop_grid"]),
        tol=_tol(p, "tol_restriction", 1e-9), s_count=int(p["s_count"])), {}


def _run_sum_tensor(p: dict):
    n = int(p["grid"])
    c1 = connection_from_json(p["connection_a"])
    c2 = connection_from_json(p["connection_b"])
    p1, p2 = scale_s_path(c1), scale_s_path(c2)
    loop = make_circle_loop(1, n)
    gdot = velocity_variation(loop)
    s_count = int(p["s_count"])
    checks = []
    checks += identity_checks("sum", c1=c1, c2=c2, loop=loop, v=None,
                              tol=_tol(p, "tol_sum", 1e-12))
    checks += identity_checks("sum", c1=p1, c2=p2, loop=loop, v=gdot,
                              tol=_tol(p, "tol_sum", 1e-12), s_count=s_count)
    checks += identity_checks("tensor", c1=c1, c2=c2, loop=loop,
                              tol=_tol(p, "tol_tensor", 1e-9))
    checks += identity_checks("tensor-mixed", conn=c1, path=p2, loop=loop, v=gdot,
                              tol=_tol(p, "tol_mixed", 1e-8), s_count=s_count)
    checks += identity_checks("cancel", path=p1, conn=c2, loop=loop, v=gdot,
                              tol=_tol(p, "tol_cancel", 1e-12), s_count=s_count)
    return checks, {}


def _rand_exact_class(rng, max_rank=3):
    from fractions import Fraction
    n = int(rng.integers(0, max_rank + 1))
    return SpectralClass.exact(
        [(Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 8))),
          Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 8))))
         for _ in range(n)])


def _run_lk_ring(p: dict):
    from .circle_k import LKElement
    rng = np.random.default_rng(int(p["seed"]))
    count = int(p["count"])
    failures = {"add-comm": 0, "add-assoc": 0, "mul-comm": 0, "mul-assoc": 0,
                "distrib": 0, "khat-hom": 0}
    for _ in range(count):
        x = LKElement.make(_rand_exact_class(rng), _rand_exact_class(rng))
        y = LKElement.make(_rand_exact_class(rng), _rand_exact_class(rng))
        z = LKElement.make(_rand_exact_class(rng), _rand_exact_class(rng))
        failures["add-comm"] += not lk_eq(lk_add(x, y), lk_add(y, x))
        failures["add-assoc"] += not lk_eq(lk_add(lk_add(x, y), z), lk_add(x, lk_add(y, z)))
        failures["mul-comm"] += not lk_eq(lk_mul(x, y), lk_mul(y, x))
        failures["mul-assoc"] += not lk_eq(lk_mul(lk_mul(x, y), z), lk_mul(x, lk_mul(y, z)))
        failures["distrib"] += not lk_eq(lk_mul(x, lk_add(y, z)),
                                         lk_add(lk_mul(x, y), lk_mul(x, z)))
        failures["khat-hom"] += not (
            to_khat(lk_add(x, y)).matches(to_khat(x).add(to_khat(y)))
            and to_khat(lk_mul(x, y)).matches(to_khat(x).mul(to_khat(y))))
    checks = [DefectReport(f"ring-law-{k}", float(v), 0.0, 0.5,
                           note=f"failures out of {count} random triples")
              for k, v in failures.items()]

    # winding evaluation against the transport route
    n = int(p["grid"])
    logs = [0.4 + 1.3j, -0.5 + 0.2j]
    conn = constant_diagonal_connection(logs)
    cls = class_from_holonomy(holonomy(conn, make_circle_loop(1, n)))
    rows = []
    worst = 0.0
    for k in range(-2, 4):
        loop = make_circle_loop(k, n)
        via_transport = bch_eval(conn, FormQuery.on_loop(loop))
        via_map = i_map_eval(cls, k)
        worst = max(worst, abs(via_map - via_transport))
        rows.append((k, via_transport.real, via_transport.imag,
                     via_map.real, via_map.imag))
    checks.append(DefectReport("imap-vs-transport-windings", worst, 0.0,
                               _tol(p, "tol_imap", 1e-8)))

    # star product against the Kronecker holonomy oracle
    logs2 = [0.5j, 0.1 - 0.7j]
    c2 = constant_diagonal_connection(logs2)
    loop = make_circle_loop(1, n)
    star = monoid_star(class_from_holonomy(holonomy(conn, loop), 1e-10),
                       class_from_holonomy(holonomy(c2, loop), 1e-10))
    oracle = class_from_holonomy(kron(mat_exp(np.diag(logs)), mat_exp(np.diag(logs2))),
                                 1e-10)
    ok = star.rank == oracle.rank and star.matches(oracle)
    checks.append(DefectReport("star-vs-kronecker-holonomy", float(not ok), 0.0, 0.5,
                               note=f"rank {star.rank} against {oracle.rank}"))
    return checks, {"csv_header": ("winding", "bch_re", "bch_im", "imap_re", "imap_im"),
                    "csv_rows": rows}


def _run_lk_decision(p: dict):
    rng = np.random.default_rng(int(p["seed"]))
    pairs = int(p["pairs"])
    rank = int(p["rank"])
    tau = float(p["tau"])
    n = int(p["grid"])
    perturbation = float(p["perturbation"])
    wrong_equal, wrong_perturbed = 0, 0
    for _ in range(pairs):
        logs = rng.uniform(-1.5, 1.5, rank) + 1j * rng.uniform(0.3, 5.9, rank)
        shifts = 2j * np.pi * rng.integers(-2, 3, rank)
        perm = rng.permutation(rank)
        c0 = constant_diagonal_connection(logs)
        c1 = constant_diagonal_connection(logs[perm] + shifts[perm])
        if not bcs_equivalent_s1(c0, c1, tol=tau, grid=n).equivalent:
            wrong_equal += 1
        bump = np.zeros(rank, dtype=complex)
        bump[int(rng.integers(0, rank))] = perturbation
        c2 = constant_diagonal_connection(logs + bump)
        if bcs_equivalent_s1(c0, c2, tol=tau, grid=n).equivalent:
            wrong_perturbed += 1
    return [
        DefectReport("decision-equal-mod-2pi-i", float(wrong_equal), 0.0, 0.5,
                     note=f"misclassified out of {pairs} equivalent pairs"),
        DefectReport("decision-perturbed", float(wrong_perturbed), 0.0, 0.5,
                     note=f"misclassified out of {pairs} perturbed pairs"),
    ], {}


def _run_fundamental_t2(p: dict):
    n = int(p["grid"])
    conn = connection_from_json(p["connection"])
    loop = _loop_from(p, n)
    v = _variation(p["variation"], n)
    lhs = loop_forms.loop_d(lambda l: bch_eval(conn, FormQuery.on_loop(l)), loop, [v],
                            h=float(p["fd_step"]))
    rhs = -bch_eval(conn, FormQuery.on_loop(loop, [velocity_variation(loop), v]))
    return [DefectReport("d-trace-hol-vs-contraction", lhs, rhs,
                         _tol(p, "tol_fundamental", 1e-4))], {}


_REGISTRY: dict[str, tuple[str, object]] = {
    "ss61-ex1": ("upper-triangular path: vanishing odd form, equal traces, "
                 "non-conjugate holonomies", _run_ss61_ex1),
    "ss61-ex2": ("rotation path: exact base form but nonzero loop contraction",
                 _run_ss61_ex2),
    "ss61-ex3": ("shifted Jordan path: nonzero base form, closed loop form",
                 _run_ss61_ex3),
    "homotopy-s1": ("degree-0 homotopy identity for a nonabelian circle path",
                    _run_homotopy_s1),
    "homotopy-t2-deg2": ("degree-0 and degree-2 homotopy identity on the torus",
                         _run_homotopy_t2),
    "subdivision-invariance": ("subdivision, trivialization and composition "
                               "invariance of transports", _run_subdivision),
    "gauge-invariance": ("loop-form values under phase and constant gauges",
                         _run_gauge),
    "restriction": ("loop forms restricted to constant loops match base forms",
                    _run_restriction),
    "sum-tensor": ("additivity, multiplicativity, mixed and cancellation identities",
                   _run_sum_tensor),
    "lk-s1-ring": ("ring laws, rank/det homomorphism and winding evaluation "
                   "of circle classes", _run_lk_ring),
    "lk-s1-decision": ("randomized spectral-class decision procedure",
                       _run_lk_decision),
    "fundamental-property-t2": ("derivative of the holonomy trace against the "
                                "contracted degree-2 form", _run_fundamental_t2),
}


def list_scenarios() -> list[tuple[str, str]]:
    """Registry names with one-line descriptions, in stable order."""
    return [(name, desc) for name, (desc, _) in _REGISTRY.items()]


def default_config(name: str) -> ScenarioConfig:
    if name not in _REGISTRY:
        raise ScenarioLookupError(f"unknown scenario {name!r}")
    fname = name.replace("-", "_") + ".json"
    text = resources.files("loopchern.configs").joinpath(fname).read_text()
    data = json.loads(text)
    return ScenarioConfig(name=data["name"], params=data.get("params", {}))


def run_scenario(cfg: ScenarioConfig) -> Report:
    """Execute a scenario's checks; never raises for in-check numeric trouble."""
    if cfg.name not in _REGISTRY:
        raise ScenarioLookupError(f"unknown scenario {cfg.name!r}")
    params = dict(default_config(cfg.name).params)
    params.update(cfg.params)
    runner = _REGISTRY[cfg.name][1]
    started = time.perf_counter()
    try:
        checks, extras = runner(params)
    except EngineError as exc:
        checks, extras = [_errored("scenario-execution", 0.0, exc)], {}
    elapsed = time.perf_counter() - started
    engine = {
        "grid": int(params.get("grid", 0)),
        "scheme": SCHEME,
        "time_convention": "earliest-leftmost",
        "s_quadrature": f"gauss-legendre-{params.get('s_count', 'n/a')}",
    }
    return Report(scenario=cfg.name, checks=checks, engine=engine, params=params,
                  timing_seconds=elapsed,
                  csv_header=extras.get("csv_header"),
                  csv_rows=extras.get("csv_rows"))
