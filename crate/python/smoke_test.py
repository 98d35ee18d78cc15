"""Smoke test for the contention_lab_py extension.

Build and install first:

    pip install maturin
    pip install --no-build-isolation ./crates/python

then run `python python/smoke_test.py` (or `pytest python/`).
"""

import math

import contention_lab_py as cl


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def test_transition_probabilities():
    p0, pc = cl.transition_probabilities(2, 0.5)
    assert close(p0, 0.5) and close(pc, 0.5)
    p0, pc = cl.transition_probabilities(10, 0.1)
    assert close(pc, 0.9**9)
    assert close(p0, 10 * 0.1 * 0.9**9)


def test_stationary_agrees_with_linear_solve():
    for m in (2, 5, 10, 50):
        for pr in (0.01, 0.3, 0.9):
            p0, pc = cl.transition_probabilities(m, pr)
            a = cl.stationary(p0, pc)
            b = cl.stationary_linear_solve(p0, pc)
            assert close(a[0], b[0]) and close(a[1], b[1])
            assert close(sum(a), 1.0)


def test_chain_quantities():
    c = cl.analyze(5, 0.1)
    assert c.m == 5 and close(c.pr, 0.1)
    assert close(c.delay_d * c.pi1, c.q_mean, 0.0)
    assert close(c.per_user_throughput, c.pi1 / 5)
    assert cl.throughput(5, 0.1) == c.pi1
    assert cl.occupancy(5, 0.1) == c.occupancy_u


def test_limits_and_inversion():
    assert close(cl.asymptotic_throughput_limit(3), 0.6)
    assert abs(cl.throughput(3, 1e-7) - 0.6) < 1e-6
    pr = cl.pr_from_occupancy(24.0, 50)
    assert abs(cl.occupancy(50, pr) - 24.0) < 1e-9
    assert abs(cl.throughput(50, pr) - 0.4996) < 1e-4


def test_errors():
    for call, exc in [
        (lambda: cl.analyze(0, 0.5), cl.ModelError),
        (lambda: cl.throughput(3, 1.5), cl.ModelError),
        (lambda: cl.throughput(3, 0.0), cl.DegenerateChainError),
        (lambda: cl.occupancy(1, 0.5), cl.UnboundedError),
        (lambda: cl.delay(3, 1.0), cl.UnboundedError),
        (lambda: cl.simulate(2, 0.5, slots=1000, pt=0.5), cl.NotSupportedError),
    ]:
        try:
            call()
        except exc:
            continue
        raise AssertionError(f"expected {exc.__name__}")
    assert issubclass(cl.DegenerateChainError, ValueError)
    assert issubclass(cl.NotSupportedError, cl.SimulationError)


def test_simulate():
    s = cl.simulate(2, 0.5, slots=200_000, seed=3)
    assert abs(s.busy_fraction - 0.5) < 0.01
    assert abs(s.mean_holding - 2.0) < 0.1
    assert sum(s.per_user_success) > 0
    assert s.jain_index > 0.99
    d = s.to_dict()
    assert d["measured_slots"] == s.measured_slots
    assert sum(s.holding_histogram.values()) == s.completed_holdings
    again = cl.simulate(2, 0.5, slots=200_000, seed=3)
    assert again.to_dict() == d


def test_trace():
    t = cl.trace(3, 0.5, 20, seed=7)
    assert len(t) == 20
    assert {kind for kind, _ in t} <= {"idle", "success", "collision"}
    assert t == cl.trace(3, 0.5, 20, seed=7)


def test_sweep_and_validate():
    rows = cl.sweep("throughput-vs-pr", [2, 5, 10], [i / 100 for i in range(1, 100)])
    assert len(rows) == 297
    assert all(0.0 < r["pi1"] < 1.0 for r in rows)
    rows = cl.sweep("delay", [50], [24.0])
    assert math.isclose(rows[0]["u"], 24.0)
    report = cl.validate([2], [0.5], slots=200_000)
    assert report["totals"]["points"] == 1
    assert len(report["errata"]) == 3


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok  {test.__name__}")
    print(f"{len(tests)} passed")
