"""Synchronous round-based execution of the protocol.

A message emitted in round ``k`` is consumed in round ``k + 1``; the initial
broadcasts are consumed in round 0. Every round first freezes all inboxes and
only then lets the nodes run, so the outcome does not depend on node order.

This is the reference implementation: it keeps full :class:`NodeState`
objects, can audit invariants after every round and write a message trace.
:mod:`quantcons.kernel` runs the same rounds on flat integer arrays.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

from . import analysis
from .digraph import Digraph, PriorityMap, is_strongly_connected
from .protocol import Inbox, Message, MessageKind, NodeState, init_node, node_round

__all__ = [
    "AuditError",
    "BoundViolation",
    "ConfigurationError",
    "RoundRecord",
    "RunReport",
    "SimState",
    "audit_invariants",
    "build_report",
    "default_max_rounds",
    "exact_mean",
    "run_until_quiescent",
    "simulate",
    "start_run",
    "step",
]

SCHEMA_VERSION = 1
FULL = "FullMassSummation"
PARTIAL = "PartialMassSummation"


class ConfigurationError(ValueError):
    pass


class BoundViolation(RuntimeError):
    """A run failed to go quiet within its round budget."""


class AuditError(AssertionError):
    def __init__(self, round_: int, violations: list[str]):
        super().__init__(f"round {round_}: " + "; ".join(violations))
        self.round = round_
        self.violations = violations


@dataclass(frozen=True)
class RoundRecord:
    round: int
    deliveries: int  # (message, receiver) pairs consumed this round
    transmissions: int  # messages emitted this round, a broadcast counts once
    transmitting_nodes: int
    emitted: tuple[Message, ...]
    # mass right after merging (before any send) and state, per node
    view: tuple[tuple[int, int, int, int], ...]


@dataclass(frozen=True)
class SimState:
    graph: Digraph
    priorities: PriorityMap
    nodes: tuple[NodeState, ...]
    in_flight: tuple[Message, ...]
    initial_values: tuple[int, ...]
    round: int = 0
    last: RoundRecord | None = None

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def quiescent(self) -> bool:
        return not self.in_flight and not any(x.s_br or x.m_tr for x in self.nodes)

    def view(self) -> tuple[tuple[int, int, int, int], ...]:
        return tuple((x.mass.y, x.mass.z, x.state.y_s, x.state.z_s) for x in self.nodes)


def default_max_rounds(g: Digraph) -> int:
    return analysis.convergence_bound(g.n, g.m) + 2 * g.n


def start_run(g: Digraph, priorities: PriorityMap, initial_values: Sequence[int]) -> SimState:
    if len(initial_values) != g.node_count:
        raise ConfigurationError(
            f"{len(initial_values)} initial values given for {g.node_count} nodes"
        )
    if len(priorities.order) != g.node_count:
        raise ConfigurationError("priority map does not match the digraph")
    if not is_strongly_connected(g):
        warnings.warn("digraph is not strongly connected; convergence is not guaranteed", stacklevel=2)
    nodes, msgs = zip(*(init_node(j, v) for j, v in enumerate(initial_values)))
    return SimState(g, priorities, tuple(nodes), tuple(msgs), tuple(int(v) for v in initial_values))


def _deliver(sim: SimState) -> tuple[list[Inbox], int]:
    g = sim.graph
    bcast: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    direct: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    deliveries = 0
    for msg in sim.in_flight:
        if msg.kind is MessageKind.BROADCAST:
            for l in g.out_neighbors(msg.sender):
                bcast[l].append((msg.y, msg.z))
                deliveries += 1
        else:
            direct[msg.receiver].append((msg.y, msg.z))
            deliveries += 1
    return [Inbox(b, d) for b, d in zip(bcast, direct)], deliveries


def step(sim: SimState) -> SimState:
    """Deliver everything in flight, run every node once, collect new messages."""
    inboxes, deliveries = _deliver(sim)
    nodes = []
    emitted: list[Message] = []
    view = []
    senders = 0
    for node, inbox in zip(sim.nodes, inboxes):
        new, out = node_round(node, inbox, sim.priorities)
        nodes.append(new)
        emitted.extend(out)
        senders += bool(out)
        sent = next((m for m in out if m.kind is MessageKind.DIRECTED), None)
        y, z = (sent.y, sent.z) if sent else new.mass
        view.append((y, z, new.state.y_s, new.state.z_s))
    rec = RoundRecord(
        round=sim.round,
        deliveries=deliveries,
        transmissions=len(emitted),
        transmitting_nodes=senders,
        emitted=tuple(emitted),
        view=tuple(view),
    )
    return replace(sim, nodes=tuple(nodes), in_flight=tuple(emitted), round=sim.round + 1, last=rec)


def exact_mean(states: Iterable[tuple[int, int]]) -> Fraction:
    """Exact mean of ``y_s / z_s`` over nodes via a common denominator."""
    states = list(states)
    if not states:
        return Fraction(0)
    lcm = math.lcm(*(z for _, z in states))
    num = sum(y * (lcm // z) for y, z in states)
    return Fraction(num, lcm * len(states))


# --- auditing ---------------------------------------------------------------


def _all_leading(sim: SimState) -> bool:
    if any(m.kind is MessageKind.DIRECTED for m in sim.in_flight):
        return False
    masses = {x.mass for x in sim.nodes if x.mass.z > 0}
    return len(masses) == 1


def audit_invariants(sim: SimState, previous: SimState | None = None) -> list[str]:
    """Check the protocol invariants on ``sim``; empty list means healthy.

    With ``previous`` (the state one round earlier) the monotonicity checks
    and the no-new-unicast rule after all masses became leading also run.
    """
    bad: list[str] = []
    g = sim.graph
    sum_y = sum(x.mass.y for x in sim.nodes)
    sum_z = sum(x.mass.z for x in sim.nodes)
    for x in sim.nodes:
        if x.state.z_s < 1:
            bad.append(f"node {x.id + 1}: z_s={x.state.z_s} < 1")
        if x.mass.z < 0 or (x.mass.z == 0 and x.mass.y != 0):
            bad.append(f"node {x.id + 1}: malformed mass {tuple(x.mass)}")
        if x.s_br or x.m_tr:
            bad.append(f"node {x.id + 1}: flags left raised after the round")
        if x.rr_cursor and not 0 <= x.rr_cursor < g.out_degree(x.id):
            bad.append(f"node {x.id + 1}: round-robin cursor {x.rr_cursor} out of range")
    for msg in sim.in_flight:
        if msg.kind is MessageKind.DIRECTED:
            sum_y += msg.y
            sum_z += msg.z
            if msg.z <= 0:
                bad.append(f"directed message from node {msg.sender + 1} carries z={msg.z}")
            if msg.receiver not in g.out_neighbors(msg.sender):
                bad.append(f"directed message {msg.sender + 1}->{msg.receiver + 1} uses no edge")
    if sum_y != sum(sim.initial_values):
        bad.append(f"sum of y is {sum_y}, expected {sum(sim.initial_values)}")
    if sum_z != sim.n:
        bad.append(f"sum of z is {sum_z}, expected {sim.n}")

    leading = max(x.mass.key for x in sim.nodes)
    for x in sim.nodes:
        if x.state.key > leading:
            bad.append(f"node {x.id + 1}: state {tuple(x.state)} exceeds leading mass {leading[::-1]}")

    if previous is not None:
        prev_max = max(x.mass.z for x in previous.nodes)
        if leading[0] < prev_max:
            bad.append(f"max z dropped from {prev_max} to {leading[0]}")
        for a, b in zip(previous.nodes, sim.nodes):
            if b.state.key < a.state.key:
                bad.append(f"node {b.id + 1}: state went back from {tuple(a.state)} to {tuple(b.state)}")
        if _all_leading(previous) and any(m.kind is MessageKind.DIRECTED for m in sim.in_flight):
            bad.append("directed message sent after every mass was already leading")
    return bad


# --- reporting --------------------------------------------------------------


@dataclass
class RunReport:
    n: int
    m: int
    d_max_in: int
    initial_values: list[int]
    converged_round: int
    rounds_executed: int
    final_states: list[tuple[int, int]]
    final_masses: list[tuple[int, int]]
    tx_count: list[int]
    comp_count: list[int]
    broadcasts: list[int]
    directed: list[int]
    merges: list[int]
    broadcast_fanout: list[int]
    mean_state: list[Fraction]
    cumulative_transmissions: list[int]
    transmitting_nodes: list[int]
    exact: bool
    alpha: int | None
    scenario: str | None
    compliance: analysis.ComplianceRecord
    backend: str = "python"
    table: list[list[tuple[int, int, int, int]]] | None = field(default=None, repr=False)

    @property
    def sum_y(self) -> int:
        return sum(self.initial_values)

    @property
    def total_transmissions(self) -> int:
        return sum(self.tx_count)

    @property
    def mean_state_real(self) -> list[float]:
        return [float(q) for q in self.mean_state]

    @property
    def target(self) -> Fraction:
        return Fraction(self.sum_y, self.n)

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "backend": self.backend,
            "n": self.n,
            "m": self.m,
            "d_max_in": self.d_max_in,
            "initial_values": self.initial_values,
            "sum_y": self.sum_y,
            "average": f"{self.sum_y}/{self.n}",
            "converged_round": self.converged_round,
            "rounds_executed": self.rounds_executed,
            "exact": self.exact,
            "alpha": self.alpha,
            "scenario": self.scenario,
            "total_transmissions": self.total_transmissions,
            "nodes": [
                {
                    "node": j + 1,
                    "y_s": s[0],
                    "z_s": s[1],
                    "q_s": f"{s[0]}/{s[1]}",
                    "y": mass[0],
                    "z": mass[1],
                    "tx_count": self.tx_count[j],
                    "comp_count": self.comp_count[j],
                    "broadcasts": self.broadcasts[j],
                    "directed": self.directed[j],
                    "merges": self.merges[j],
                    "broadcast_fanout": self.broadcast_fanout[j],
                }
                for j, (s, mass) in enumerate(zip(self.final_states, self.final_masses))
            ],
            "series": {
                "mean_state": [f"{q.numerator}/{q.denominator}" for q in self.mean_state],
                "mean_state_real": self.mean_state_real,
                "cumulative_transmissions": self.cumulative_transmissions,
                "transmitting_nodes": self.transmitting_nodes,
            },
            "compliance": self.compliance.to_dict(),
        }
        return d


def _finish(
    g: Digraph,
    initial_values: Sequence[int],
    states: Sequence[tuple[int, int]],
    masses: Sequence[tuple[int, int]],
) -> tuple[bool, int | None, str | None]:
    n, total = g.n, sum(initial_values)
    exact = all(ys * n == zs * total and zs >= 1 and n % zs == 0 for ys, zs in states)
    alpha = scenario = None
    if exact and len(set(states)) == 1:
        alpha = n // states[0][1]
        scenario = FULL if alpha == 1 else PARTIAL
    return exact, alpha, scenario


def build_report(
    g: Digraph,
    initial_values: Sequence[int],
    *,
    converged_round: int,
    rounds_executed: int,
    states: Sequence[tuple[int, int]],
    masses: Sequence[tuple[int, int]],
    tx_count: Sequence[int],
    comp_count: Sequence[int],
    broadcasts: Sequence[int],
    directed: Sequence[int],
    merges: Sequence[int],
    state_history: Sequence[Sequence[tuple[int, int]]],
    transmissions: Sequence[int],
    transmitting_nodes: Sequence[int],
    backend: str,
    table=None,
) -> RunReport:
    """Common report assembly for both the object engine and the array kernel.

    ``state_history[k]`` holds every node's ``(y_s, z_s)`` after round ``k``;
    ``transmissions[k]`` is the number of messages emitted in round ``k``.
    """
    exact, alpha, scenario = _finish(g, initial_values, states, masses)
    cum, running = [], g.n
    for t in transmissions:
        running += t
        cum.append(running)
    means: list[Fraction] = []
    prev_row = None
    for row in state_history:
        row = tuple(row)
        if row != prev_row:
            q = exact_mean(row)
            prev_row = row
        means.append(q)
    return RunReport(
        n=g.n,
        m=g.m,
        d_max_in=g.max_in_degree,
        initial_values=[int(v) for v in initial_values],
        converged_round=converged_round,
        rounds_executed=rounds_executed,
        final_states=[tuple(s) for s in states],
        final_masses=[tuple(x) for x in masses],
        tx_count=list(tx_count),
        comp_count=list(comp_count),
        broadcasts=list(broadcasts),
        directed=list(directed),
        merges=list(merges),
        broadcast_fanout=[b * g.out_degree(j) for j, b in enumerate(broadcasts)],
        mean_state=means,
        cumulative_transmissions=cum,
        transmitting_nodes=list(transmitting_nodes),
        exact=exact,
        alpha=alpha,
        scenario=scenario,
        compliance=analysis.check_bounds(g.n, g.m, g.max_in_degree, converged_round, tx_count, comp_count),
        backend=backend,
        table=table,
    )


def _trace_records(rec: RoundRecord, g: Digraph) -> Iterable[dict]:
    # ``round`` is the round in which the message is consumed
    for m in rec.emitted:
        yield _trace_record(rec.round + 1, m, g)


def _trace_record(round_: int, m: Message, g: Digraph) -> dict:
    receivers = g.out_neighbors(m.sender) if m.kind is MessageKind.BROADCAST else (m.receiver,)
    return {
        "round": round_,
        "kind": m.kind.value,
        "sender": m.sender + 1,
        "receivers": [r + 1 for r in receivers],
        "y": m.y,
        "z": m.z,
    }


def run_until_quiescent(
    sim: SimState,
    max_rounds: int | None = None,
    confirm_rounds: int | None = None,
    *,
    audit: bool = False,
    trace: TextIO | None = None,
    keep_table: bool = False,
) -> RunReport:
    """Step until nothing is in flight, then confirm silence for extra rounds.

    ``converged_round`` is the last round that delivered a message. Raises
    :class:`BoundViolation` when ``max_rounds`` pass without quiescence and
    :class:`AuditError` (with ``audit=True``) on the first broken invariant.
    """
    g = sim.graph
    max_rounds = default_max_rounds(g) if max_rounds is None else max_rounds
    confirm_rounds = 2 * g.n if confirm_rounds is None else confirm_rounds
    if trace is not None:
        for m in sim.in_flight:
            trace.write(json.dumps(_trace_record(sim.round, m, g), sort_keys=True) + "\n")
    if audit:
        bad = audit_invariants(sim)
        if bad:
            raise AuditError(sim.round, bad)

    table = [list(sim.view())] if keep_table else None
    history: list[tuple[tuple[int, int], ...]] = []
    tx_series: list[int] = []
    senders: list[int] = []
    converged = 0

    def advance(cur: SimState) -> SimState:
        nonlocal converged
        nxt = step(cur)
        rec = nxt.last
        if audit:
            bad = audit_invariants(nxt, cur)
            if bad:
                raise AuditError(rec.round, bad)
        if trace is not None:
            for r in _trace_records(rec, g):
                trace.write(json.dumps(r, sort_keys=True) + "\n")
        if rec.deliveries:
            converged = rec.round
        if table is not None:
            table.append(list(rec.view))
        history.append(tuple((x.state.y_s, x.state.z_s) for x in nxt.nodes))
        tx_series.append(rec.transmissions)
        senders.append(rec.transmitting_nodes)
        return nxt

    while not sim.quiescent:
        if sim.round >= max_rounds:
            raise BoundViolation(
                f"no quiescence after {max_rounds} rounds (n={g.n}, m={g.m})"
            )
        sim = advance(sim)
    for _ in range(confirm_rounds):
        sim = advance(sim)
        if sim.last.transmissions or sim.last.deliveries:
            raise AuditError(sim.last.round, ["message activity after quiescence"])

    return build_report(
        g,
        sim.initial_values,
        converged_round=converged,
        rounds_executed=sim.round,
        states=[tuple(x.state) for x in sim.nodes],
        masses=[tuple(x.mass) for x in sim.nodes],
        tx_count=[x.tx_count for x in sim.nodes],
        comp_count=[x.comp_count for x in sim.nodes],
        broadcasts=[x.broadcasts for x in sim.nodes],
        directed=[x.directed for x in sim.nodes],
        merges=[x.merges for x in sim.nodes],
        state_history=history,
        transmissions=tx_series,
        transmitting_nodes=senders,
        backend="python",
        table=table,
    )


def simulate(
    g: Digraph,
    priorities: PriorityMap,
    initial_values: Sequence[int],
    **kwargs,
) -> RunReport:
    """``start_run`` followed by ``run_until_quiescent``."""
    return run_until_quiescent(start_run(g, priorities, initial_values), **kwargs)
