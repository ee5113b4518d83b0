"""Per-node event-triggered quantized consensus logic.

A node carries a *mass* ``(y, z)`` that moves through the network and merges,
and a *state* ``(y_s, z_s)`` holding the largest mass it has heard of, ordered
by ``z`` first and ``y`` second. The state ratio ``y_s / z_s`` is the node's
exact estimate of the network average.

Every function here is pure: it takes a :class:`NodeState` and returns a new
one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .digraph import PriorityMap

__all__ = [
    "Inbox",
    "MassPair",
    "Message",
    "MessageKind",
    "NodeState",
    "ProtocolError",
    "StateTriple",
    "apply_condition_1",
    "apply_condition_2",
    "apply_condition_3",
    "emit",
    "init_node",
    "leading_order",
    "merge_masses",
    "node_round",
]


class ProtocolError(RuntimeError):
    """An internal protocol rule was broken (should be unreachable)."""


class MassPair(NamedTuple):
    y: int
    z: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.z, self.y)


ZERO_MASS = MassPair(0, 0)


class StateTriple(NamedTuple):
    """State variables kept as the unreduced pair ``(y_s, z_s)``."""

    y_s: int
    z_s: int

    @property
    def q_s(self) -> Fraction:
        return Fraction(self.y_s, self.z_s)

    @property
    def key(self) -> tuple[int, int]:
        return (self.z_s, self.y_s)

    def text(self) -> str:
        return f"{self.y_s} / {self.z_s}"


class MessageKind(enum.Enum):
    BROADCAST = "broadcast"
    DIRECTED = "directed"


@dataclass(frozen=True, slots=True)
class Message:
    kind: MessageKind
    y: int
    z: int
    sender: int
    receiver: int | None = None


@dataclass(frozen=True, slots=True)
class NodeState:
    id: int
    mass: MassPair
    state: StateTriple
    s_br: bool = False
    m_tr: bool = False
    rr_cursor: int = 0
    tx_count: int = 0
    comp_count: int = 0
    broadcasts: int = 0
    directed: int = 0
    merges: int = 0


class Inbox(NamedTuple):
    """Round deliveries for one node: broadcast states and directed masses."""

    broadcasts: Sequence[tuple[int, int]] = ()
    directed: Sequence[tuple[int, int]] = ()

    def __bool__(self) -> bool:
        return bool(self.broadcasts) or bool(self.directed)


def init_node(id: int, initial_value: int) -> tuple[NodeState, Message]:
    """Unit mass carrying the initial value; state mirrors it and is broadcast.

    The initialization counts as one computation and one transmission.
    """
    v = int(initial_value)
    node = NodeState(
        id=id,
        mass=MassPair(v, 1),
        state=StateTriple(v, 1),
        tx_count=1,
        comp_count=1,
        broadcasts=1,
    )
    return node, Message(MessageKind.BROADCAST, v, 1, id)


def merge_masses(node: NodeState, incoming: Iterable[tuple[int, int]]) -> NodeState:
    y, z = node.mass
    got = False
    for dy, dz in incoming:
        if dz <= 0:
            raise ProtocolError(f"node {node.id} received a directed mass with z={dz}")
        y += dy
        z += dz
        got = True
    if not got:
        return node
    return replace(node, mass=MassPair(y, z), merges=node.merges + 1)


def leading_order(a: tuple[int, int], b: tuple[int, int]) -> int:
    """Compare two ``(z, y)`` pairs: larger ``z`` wins, then larger ``y``.

    Returns 1, 0 or -1 like a classic ``cmp``.
    """
    return (a > b) - (a < b)


def apply_condition_1(node: NodeState, received_states: Iterable[tuple[int, int]]) -> NodeState:
    """Adopt the best received ``(y_s, z_s)`` if it strictly beats the own state."""
    best = max(((zs, ys) for ys, zs in received_states), default=None)
    if best is None or best <= node.state.key:
        return node
    return replace(node, state=StateTriple(best[1], best[0]), s_br=True)


def apply_condition_2(node: NodeState) -> NodeState:
    """Promote the own mass to state if it strictly beats the state."""
    if node.mass.key > node.state.key:
        return replace(node, state=StateTriple(node.mass.y, node.mass.z), s_br=True)
    return node


def apply_condition_3(node: NodeState) -> NodeState:
    """Flag a nonzero mass that is smaller than the state for forwarding."""
    y, z = node.mass
    ys, zs = node.state
    if 0 < z < zs or (z == zs and y < ys):
        return replace(node, m_tr=True)
    return node


def emit(node: NodeState, priorities: PriorityMap) -> tuple[NodeState, list[Message]]:
    """Turn raised flags into messages, broadcast first, and clear them.

    A directed message carries the whole current mass to the out-neighbor
    under the round-robin cursor, which then advances.
    """
    out: list[Message] = []
    changes: dict = {}
    if node.s_br:
        out.append(Message(MessageKind.BROADCAST, node.state.y_s, node.state.z_s, node.id))
        changes["broadcasts"] = node.broadcasts + 1
    if node.m_tr:
        if node.mass.z <= 0:
            raise ProtocolError(f"node {node.id} tried to send an empty mass")
        order = priorities.order[node.id]
        if not order:
            raise ProtocolError(f"node {node.id} has no out-neighbor to send its mass to")
        target = order[node.rr_cursor]
        out.append(Message(MessageKind.DIRECTED, node.mass.y, node.mass.z, node.id, target))
        changes.update(
            mass=ZERO_MASS,
            rr_cursor=(node.rr_cursor + 1) % len(order),
            directed=node.directed + 1,
        )
    if not out:
        return node, out
    changes.update(s_br=False, m_tr=False, tx_count=node.tx_count + len(out))
    return replace(node, **changes), out


def node_round(
    node: NodeState, inbox: Inbox, priorities: PriorityMap
) -> tuple[NodeState, list[Message]]:
    """One synchronous round. An empty inbox leaves the node asleep."""
    if not inbox:
        return node, []
    node = merge_masses(node, inbox.directed)
    node = apply_condition_1(node, inbox.broadcasts)
    node = apply_condition_2(node)
    node = apply_condition_3(node)
    node = replace(node, comp_count=node.comp_count + 1)
    return emit(node, priorities)
