"""End-to-end acceptance checks, one test per criterion.

The conftest hook prints a PASS/FAIL line per test at the end of the run.
Criteria 3, 4, 5 and 8 share one audited campaign, computed once per module.
"""

import hashlib
import io
import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

import pytest

from quantcons import analysis
from quantcons.digraph import assign_priorities, generate_random_strongly_connected
from quantcons.engine import AuditError, BoundViolation, simulate
from quantcons.experiments import (
    EXAMPLE_TABLE,
    EXAMPLE_VALUES,
    ExperimentConfig,
    derive_seed,
    replay_example,
    run_batch,
)

CAMPAIGN_RUNS = 500
CAMPAIGN_SEED = 2024
EDGE_PROBS = (0.15, 0.3, 0.6)


def campaign_case(i: int):
    """Graph, priorities and values for campaign run ``i``."""
    seed = derive_seed(CAMPAIGN_SEED, i)
    rng = random.Random(seed)
    n = rng.randint(3, 20)
    p = rng.choice(EDGE_PROBS)
    values = [rng.randint(-50, 50) for _ in range(n)]
    g = generate_random_strongly_connected(n, p, seed)
    return g, assign_priorities(g), values


def run_case(i: int):
    """Audited run with a trace; returns (report, trace text)."""
    g, pr, values = campaign_case(i)
    buf = io.StringIO()
    report = simulate(g, pr, values, audit=True, trace=buf)
    return report, buf.getvalue()


def digest(report, trace: str) -> str:
    body = json.dumps(report.to_dict(), sort_keys=True) + "\n" + trace
    return hashlib.sha256(body.encode()).hexdigest()


@dataclass
class Campaign:
    reports: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)
    audit_errors: list = field(default_factory=list)
    budget_errors: list = field(default_factory=list)
    seconds: float = 0.0


@pytest.fixture(scope="module")
def campaign() -> Campaign:
    c = Campaign()
    t0 = time.perf_counter()
    for i in range(CAMPAIGN_RUNS):
        try:
            report, trace = run_case(i)
        except AuditError as exc:
            c.audit_errors.append((i, str(exc)))
            continue
        except BoundViolation as exc:
            c.budget_errors.append((i, str(exc)))
            continue
        c.reports[i] = report
        c.digests[i] = digest(report, trace)
    c.seconds = time.perf_counter() - t0
    return c


def test_criterion_1_golden_trace():
    t0 = time.perf_counter()
    report, problems = replay_example(confirm_rounds=20)
    elapsed = time.perf_counter() - t0
    assert problems == []
    assert [list(r) for r in report.table[:5]] == [list(r) for r in EXAMPLE_TABLE]
    assert report.final_states == [(11, 2)] * 4
    # rows k >= 5 cover the 20 confirm rounds, all silent
    assert len(report.transmitting_nodes) >= 4 + 20
    assert not any(report.transmitting_nodes[4:])
    assert elapsed < 1.0


def test_criterion_2_remark_variant(remark):
    g, pr = remark
    t0 = time.perf_counter()
    report, problems = replay_example(pr)
    elapsed = time.perf_counter() - t0
    assert problems == []
    assert report.scenario == "FullMassSummation" and report.alpha == 1
    assert report.final_states == [(22, 4)] * 4
    assert elapsed < 1.0


def test_criterion_3_exactness_campaign(campaign):
    assert not campaign.audit_errors and not campaign.budget_errors
    assert len(campaign.reports) == CAMPAIGN_RUNS
    failures = []
    for i, r in campaign.reports.items():
        total, n = sum(r.initial_values), r.n
        for ys, zs in r.final_states:
            if ys * n != zs * total or n % zs or n // zs < 1:
                failures.append((i, ys, zs))
    assert failures == []
    assert campaign.seconds < 60.0


def test_criterion_4_bound_compliance(campaign):
    assert not campaign.budget_errors
    violations = []
    for i, r in campaign.reports.items():
        g, _, _ = campaign_case(i)
        conv = analysis.convergence_bound(g.n, g.m)
        txb = analysis.transmission_bound(g.n, g.m)
        cmb = analysis.computation_bound(g.n, g.m, g.max_in_degree)
        if r.converged_round > conv or max(r.tx_count) > txb or max(r.comp_count) > cmb:
            violations.append(i)
    assert violations == []


def test_criterion_5_round_invariants(campaign):
    # audit_invariants ran after every round of every run; any breach
    # (conservation, monotone max-z, dominance, empty unicasts, noise after
    # quiescence) would have been recorded as an AuditError
    assert campaign.audit_errors == []
    for r in campaign.reports.values():
        assert r.rounds_executed >= r.converged_round + 1 + 2 * r.n
        assert not any(r.transmitting_nodes[r.converged_round:])


def test_criterion_6_resource_fixtures():
    assert analysis.memory_requirement(4, 2, 22) == (15, 51)
    rep = analysis.energy_total(4, 6, 2, EXAMPLE_VALUES)
    assert rep.bit_width == 7
    assert (rep.p_sense, rep.p_comp, rep.p_trans, rep.p_total) == (9450, 945, 26460, 36855)


@pytest.mark.slow
def test_criterion_7_batch_statistics():
    t0 = time.perf_counter()
    batch = run_batch(ExperimentConfig(mode="batch", nodes=20, runs=1000, seed=0, value_sum=214))
    elapsed = time.perf_counter() - t0
    assert len(batch.runs) == 1000
    for s in batch.runs:
        assert s.exact and Fraction(s.final_q) == Fraction(214, 20)
    assert batch.series["transmitting_nodes"][-1] == 0
    mean_rounds = batch.rounds["mean"]
    mean_node_tx = batch.transmissions["mean"] / 20
    conv_min = min(analysis.convergence_bound(20, s.m) for s in batch.runs)
    tx_min = min(analysis.transmission_bound(20, s.m) for s in batch.runs)
    print(f"\nmean rounds {mean_rounds:.2f} (bound >= {conv_min}); "
          f"mean per-node tx {mean_node_tx:.2f} (bound >= {tx_min}); {elapsed:.1f}s")
    assert 10 * mean_rounds <= conv_min
    assert 10 * mean_node_tx <= tx_min
    assert elapsed < 300.0


def test_criterion_8_determinism(campaign):
    mismatched = []
    for i in campaign.reports:
        report, trace = run_case(i)
        if digest(report, trace) != campaign.digests[i]:
            mismatched.append(i)
    assert mismatched == []
