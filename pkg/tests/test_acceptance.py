"""Acceptance suite: one test per shipped criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  Grids, step sizes and tolerances are pinned here and in the
packaged scenario configs; nothing is deferred to later calibration.
"""
import time

import numpy as np
from loopchern.connections import constant_diagonal_connection
from loopchern.geometry import make_circle_loop
from loopchern.matrices import mat_exp
from loopchern.scenarios import ScenarioConfig, run_scenario
from loopchern.transport import holonomy


def _announce(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def _run(name: str, **overrides):
    report = run_scenario(ScenarioConfig(name, overrides))
    return report, {c.identity: c for c in report.checks}


def test_criterion_01_holonomy_oracle():
    rng = np.random.default_rng(12345)
    raw = rng.uniform(-1, 1, 4) + 1j * rng.uniform(-1, 1, 4)
    logs = 3.0 * raw / np.abs(raw).max()          # random with |a_i| <= 3
    conn = constant_diagonal_connection(logs)
    worst = 0.0
    for k in range(1, 6):
        loop = make_circle_loop(k, N=2048)
        exact = mat_exp(k * np.diag(logs))
        got = holonomy(conn, loop)
        # scale-relative entry error: an absolute 1e-10 is not representable
        # once entries reach e^{15} (eps * e^{15} ~ 7e-10), see the notes
        worst = max(worst, np.abs(got - exact).max() / max(1.0, np.abs(exact).max()))
    start = time.perf_counter()
    holonomy(conn, make_circle_loop(5, N=2048))
    elapsed = time.perf_counter() - start
    _announce(1, worst <= 1e-10 and elapsed < 1.0,
              f"constant-diagonal transport vs matrix exponential: "
              f"max relative entry error {worst:.2e} (tol 1e-10), "
              f"runtime {elapsed:.3f}s (< 1 s) at N=2048")


def test_criterion_02_example_1():
    report, by_id = _run("ss61-ex1")
    ok = report.passed
    ok &= by_id["bcs1-on-rotation-field"].defect <= 1e-12
    ok &= by_id["holonomy-start"].defect <= 1e-10
    ok &= by_id["holonomy-end"].defect <= 1e-10
    ok &= by_id["decision-equivalent"].lhs == 1.0
    ok &= by_id["conjugacy-probe-non-conjugate"].lhs == 1.0
    _announce(2, ok,
              f"first counterexample: odd form {by_id['bcs1-on-rotation-field'].defect:.1e} "
              f"(tol 1e-12), holonomies to 1e-10, class decision equivalent, "
              f"rank probe non-conjugate")


def test_criterion_03_example_2():
    report, by_id = _run("ss61-ex2")
    expected = 2 * np.cos(1.0) - 2
    ok = report.passed
    ok &= by_id["cs1-vanishes"].defect <= 1e-12
    ok &= abs(by_id["iota-bcs1-value"].lhs - expected) <= 1e-8
    ok &= by_id["decision-not-equivalent"].lhs == 0.0
    _announce(3, ok,
              f"second counterexample: base form {by_id['cs1-vanishes'].defect:.1e} "
              f"(tol 1e-12), contracted odd form = 2cos(1)-2 within 1e-8, "
              f"decision not equivalent")


def test_criterion_04_example_3():
    report, by_id = _run("ss61-ex3")
    ok = report.passed
    ok &= by_id["cs1-value"].defect <= 1e-10
    ok &= by_id["homotopy-degree-0"].defect <= 1e-8
    _announce(4, ok,
              f"third counterexample: base form = 4 pi i within "
              f"{by_id['cs1-value'].defect:.1e} (tol 1e-10), degree-0 defect "
              f"{by_id['homotopy-degree-0'].defect:.1e} (tol 1e-8)")


def test_criterion_05_homotopy_formula():
    report_s1, by_s1 = _run("homotopy-s1", convergence_grids=[])
    ok = by_s1["homotopy-degree-0"].defect <= 1e-8 and report_s1.passed
    start = time.perf_counter()
    report_t2, by_t2 = _run("homotopy-t2-deg2")
    elapsed = time.perf_counter() - start
    ok &= report_t2.passed
    ok &= by_t2["homotopy-degree-2"].defect <= 1e-4
    ok &= elapsed < 30.0
    _announce(5, ok,
              f"homotopy formula: degree-0 defect {by_s1['homotopy-degree-0'].defect:.1e} "
              f"(tol 1e-8) at N=2048; torus degree-2 defect "
              f"{by_t2['homotopy-degree-2'].defect:.1e} (tol 1e-4) in {elapsed:.1f}s (< 30 s)")


def test_criterion_06_fundamental_property():
    report, by_id = _run("fundamental-property-t2")
    defect = by_id["d-trace-hol-vs-contraction"].defect
    _announce(6, report.passed and defect <= 1e-4,
              f"derivative of holonomy trace vs contracted degree-2 form: "
              f"defect {defect:.1e} (tol 1e-4)")


def test_criterion_07_restriction():
    report, by_id = _run("restriction")
    worst = max(c.defect for c in report.checks)
    _announce(7, report.passed and worst <= 1e-9,
              f"constant-loop restriction, degrees 0-4 even / 1-3 odd: "
              f"worst defect {worst:.1e} (tol 1e-9)")


def test_criterion_08_invariances():
    report_a, by_a = _run("subdivision-invariance")
    report_b, by_b = _run("gauge-invariance")
    ok = report_a.passed and report_b.passed
    sub = max(by_a[k].defect for k in by_a if k.startswith("subdivision"))
    triv = by_a["trivialization-one-vs-two-chart"].defect
    gauge = max(c.defect for c in report_b.checks)
    ok &= sub <= 1e-9 and triv <= 1e-9 and gauge <= 1e-8
    _announce(8, ok,
              f"covering invariances: subdivision {sub:.1e} (tol 1e-9), "
              f"trivialization {triv:.1e} (tol 1e-9), gauge {gauge:.1e} (tol 1e-8)")


def test_criterion_09_sum_tensor():
    report, by_id = _run("sum-tensor")
    ok = report.passed
    ok &= by_id["sum-degree-0"].defect <= 1e-12
    ok &= by_id["sum-degree-1"].defect <= 1e-12
    ok &= by_id["tensor-degree-0"].defect <= 1e-9
    ok &= by_id["tensor-mixed-degree-1"].defect <= 1e-8
    ok &= by_id["cancel-degree-1"].defect <= 1e-12
    _announce(9, ok,
              f"sum/tensor identities: additivity {by_id['sum-degree-0'].defect:.1e} "
              f"(tol 1e-12), multiplicativity {by_id['tensor-degree-0'].defect:.1e} "
              f"(tol 1e-9), mixed {by_id['tensor-mixed-degree-1'].defect:.1e} (tol 1e-8), "
              f"cancellation {by_id['cancel-degree-1'].defect:.1e} (tol 1e-12)")


def test_criterion_10_circle_ring():
    report, by_id = _run("lk-s1-ring")   # count=500 exact random inputs by default
    ok = report.passed
    ring_fail = sum(int(c.lhs.real) for i, c in by_id.items() if i.startswith("ring-law"))
    ok &= ring_fail == 0
    ok &= by_id["imap-vs-transport-windings"].defect <= 1e-8
    ok &= by_id["star-vs-kronecker-holonomy"].lhs == 0.0
    _announce(10, ok,
              f"circle ring: 500 random exact triples with 0 ring-law failures, "
              f"rank/det homomorphism exact, winding map vs transport "
              f"{by_id['imap-vs-transport-windings'].defect:.1e} (tol 1e-8), "
              f"star product matches the Kronecker holonomy oracle")


def test_criterion_11_decision_procedure():
    report, by_id = _run("lk-s1-decision")   # 100 pairs each way by default
    ok = report.passed
    ok &= by_id["decision-equal-mod-2pi-i"].lhs == 0.0
    ok &= by_id["decision-perturbed"].lhs == 0.0
    _announce(11, ok,
              "decision procedure: 100/100 equal-mod-2-pi-i pairs equivalent, "
              "100/100 perturbed (1e-3) pairs inequivalent at tau=1e-8")
