import io
import json
import random
import warnings
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quantcons.digraph import assign_priorities, from_arcs, generate_random_strongly_connected
from quantcons.engine import (
    AuditError,
    BoundViolation,
    ConfigurationError,
    audit_invariants,
    exact_mean,
    run_until_quiescent,
    simulate,
    start_run,
    step,
)
from quantcons.experiments import EXAMPLE_TABLE, EXAMPLE_VALUES
from quantcons.protocol import MessageKind, StateTriple


def test_start_run_example(example):
    g, pr = example
    sim = start_run(g, pr, EXAMPLE_VALUES)
    assert sim.round == 0 and len(sim.in_flight) == 4
    assert all(m.kind is MessageKind.BROADCAST for m in sim.in_flight)


def test_start_run_length_mismatch(example):
    g, pr = example
    with pytest.raises(ConfigurationError):
        start_run(g, pr, [1, 2, 3])


def test_start_run_warns_when_not_strongly_connected():
    g = from_arcs(3, [(1, 2), (2, 3)])
    with pytest.warns(UserWarning):
        start_run(g, assign_priorities(g), [1, 2, 3])


def test_single_node():
    g = from_arcs(1, [])
    r = simulate(g, assign_priorities(g), [5])
    assert r.converged_round == 0 and r.final_states == [(5, 1)] and r.alpha == 1
    assert r.tx_count == [1]


def test_constant_values():
    g = generate_random_strongly_connected(6, 0.4, 5)
    r = simulate(g, assign_priorities(g), [3] * 6, audit=True)
    assert all(Fraction(ys, zs) == 3 for ys, zs in r.final_states)


def test_step_timing(example):
    """v1's k=1 unicast lands in round 2 at v3, so v3 only changes in the k=3 row."""
    g, pr = example
    sim = start_run(g, pr, EXAMPLE_VALUES)
    sim = step(step(sim))
    to_v3 = [m for m in sim.in_flight if m.kind is MessageKind.DIRECTED]
    assert [(m.sender, m.receiver, m.y, m.z) for m in to_v3] == [(0, 2, 4, 1)]
    assert sim.last.view == tuple(EXAMPLE_TABLE[2])
    sim = step(sim)
    assert sim.last.view == tuple(EXAMPLE_TABLE[3])


def test_step_on_quiescent_state(example):
    g, pr = example
    sim = start_run(g, pr, EXAMPLE_VALUES)
    while sim.in_flight:
        sim = step(sim)
    after = step(sim)
    assert after.nodes == sim.nodes and not after.in_flight
    assert after.last.transmissions == 0 and after.last.deliveries == 0


def test_conservation_independent_fold():
    g = generate_random_strongly_connected(6, 0.35, 12)
    values = [7, -3, 12, 0, 5, -9]
    sim = start_run(g, assign_priorities(g, "seeded_shuffle", 4), values)
    for _ in range(60):
        sim = step(sim)
        y = z = 0
        for x in sim.nodes:
            y, z = y + x.mass.y, z + x.mass.z
        for m in sim.in_flight:
            if m.kind is MessageKind.DIRECTED:
                y, z = y + m.y, z + m.z
        assert (y, z) == (12, 6)


def test_example_run(example, remark):
    r = simulate(*example, EXAMPLE_VALUES, audit=True, keep_table=True)
    assert r.table[:5] == [list(row) for row in EXAMPLE_TABLE]
    assert r.final_states == [(11, 2)] * 4 and r.alpha == 2 and r.scenario == "PartialMassSummation"
    assert r.converged_round == 4 and not any(r.transmitting_nodes[4:])
    r2 = simulate(*remark, EXAMPLE_VALUES, audit=True)
    assert r2.final_states == [(22, 4)] * 4 and r2.alpha == 1 and r2.scenario == "FullMassSummation"


def test_random_run_exact():
    g = generate_random_strongly_connected(8, 0.3, 21)
    values = [random.Random(21).randint(-40, 40) for _ in range(8)]
    r = simulate(g, assign_priorities(g), values, audit=True)
    total = sum(values)
    assert all(Fraction(ys, zs) == Fraction(total, 8) for ys, zs in r.final_states)
    assert r.mean_state[-1] == Fraction(total, 8)


def test_exact_mean():
    assert exact_mean([(7, 1), (9, 1), (7, 1), (9, 1)]) == 8
    assert exact_mean([(11, 2), (9, 1)]) == Fraction(29, 4)


def test_audit_healthy_and_corrupted(example):
    g, pr = example
    sim = start_run(g, pr, EXAMPLE_VALUES)
    assert audit_invariants(sim) == []
    nxt = step(sim)
    assert audit_invariants(nxt, sim) == []
    broken = replace(nxt.nodes[0], state=StateTriple(0, 0))
    bad = replace(nxt, nodes=(broken, *nxt.nodes[1:]))
    problems = audit_invariants(bad)
    assert len(problems) == 1 and "z_s=0" in problems[0]


def test_audit_catches_lost_mass(example):
    g, pr = example
    sim = step(start_run(g, pr, EXAMPLE_VALUES))
    bad = replace(sim, in_flight=())
    assert any("sum of y" in p for p in audit_invariants(bad))


def test_bound_violation(example):
    g, pr = example
    with pytest.raises(BoundViolation):
        simulate(g, pr, EXAMPLE_VALUES, max_rounds=2)


def test_trace_round_trips(example):
    g, pr = example
    buf = io.StringIO()
    r = simulate(g, pr, [10**30, -(10**29), 7, 9], trace=buf)
    records = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert records[0] == {"round": 0, "kind": "broadcast", "sender": 1, "receivers": [3, 4], "y": 10**30, "z": 1}
    assert sum(1 for rec in records) == sum(r.tx_count)
    assert max(rec["round"] for rec in records) == r.converged_round


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 9),
    st.sampled_from([0.15, 0.3, 0.6]),
    st.integers(0, 2**32),
    st.lists(st.integers(-1000, 1000), min_size=9, max_size=9),
)
def test_invariants_hold(n, p, seed, values):
    g = generate_random_strongly_connected(n, p, seed)
    r = simulate(g, assign_priorities(g, "seeded_shuffle", seed), values[:n], audit=True)
    assert r.exact and r.compliance.compliant
    total = sum(values[:n])
    for ys, zs in r.final_states:
        assert ys * n == zs * total and n % zs == 0


def test_not_strongly_connected_stops_inexact():
    g = from_arcs(3, [(1, 2), (2, 3)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sim = start_run(g, assign_priorities(g), [1, 2, 3])
    r = run_until_quiescent(sim)
    assert not r.exact
