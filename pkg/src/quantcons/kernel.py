"""Fast whole-run simulation on flat arrays.

The compiled ``_ckernel`` extension is used when it was built; otherwise, or
when ``QUANTCONS_PURE_PYTHON`` is set, the pure-Python ``_pykernel`` runs the
same loop. Values whose absolute sum does not fit in int64 always take the
Python path.
"""

from __future__ import annotations

import os
from typing import Sequence

from . import _pykernel
from .digraph import Digraph, PriorityMap
from .engine import BoundViolation, ConfigurationError, RunReport, build_report, default_max_rounds
from .protocol import ProtocolError

try:
    if os.environ.get("QUANTCONS_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

__all__ = ["BACKEND", "available_backends", "simulate_fast"]

BACKEND = "cython" if _ckernel is not None else "python"
INT64_LIMIT = 2**62


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernel is not None else ["python"]


def _csr(priorities: PriorityMap) -> tuple[list[int], list[int]]:
    ptr, idx = [0], []
    for seq in priorities.order:
        idx.extend(seq)
        ptr.append(len(idx))
    return ptr, idx


def simulate_fast(
    g: Digraph,
    priorities: PriorityMap,
    initial_values: Sequence[int],
    max_rounds: int | None = None,
    confirm_rounds: int | None = None,
    backend: str = "auto",
) -> RunReport:
    """Same report as :func:`quantcons.engine.simulate`, without auditing or tracing."""
    n = g.node_count
    if len(initial_values) != n:
        raise ConfigurationError(f"{len(initial_values)} initial values given for {n} nodes")
    values = [int(v) for v in initial_values]
    max_rounds = default_max_rounds(g) if max_rounds is None else max_rounds
    confirm_rounds = 2 * n if confirm_rounds is None else confirm_rounds

    if backend == "auto":
        fits = sum(abs(v) for v in values) < INT64_LIMIT
        backend = "cython" if _ckernel is not None and fits else "python"
    if backend == "cython":
        if _ckernel is None:
            raise ConfigurationError("compiled kernel is not built")
        impl = _ckernel.run
    elif backend == "python":
        impl = _pykernel.run
    else:
        raise ConfigurationError(f"unknown backend {backend!r}")

    ptr, idx = _csr(priorities)
    status, converged, rounds, finals, counters, changes, tx_series, senders = impl(
        ptr, idx, values, max_rounds, confirm_rounds
    )
    if status == 1:
        raise BoundViolation(f"no quiescence after {max_rounds} rounds (n={n}, m={g.m})")
    if status == 2:
        raise ProtocolError("a node had to forward its mass but has no out-neighbor")

    row = [(v, 1) for v in values]
    history = []
    pos = 0
    for k in range(rounds):
        while pos < len(changes) and changes[pos][0] == k:
            _, j, ysj, zsj = changes[pos]
            row[j] = (ysj, zsj)
            pos += 1
        history.append(tuple(row))

    y, z, ys, zs = finals
    tx, comp, bc, dr, mg = counters
    return build_report(
        g,
        values,
        converged_round=converged,
        rounds_executed=rounds,
        states=list(zip(ys, zs)),
        masses=list(zip(y, z)),
        tx_count=tx,
        comp_count=comp,
        broadcasts=bc,
        directed=dr,
        merges=mg,
        state_history=history,
        transmissions=tx_series,
        transmitting_nodes=senders,
        backend=backend,
    )
