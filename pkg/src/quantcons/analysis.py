"""Worst-case bounds and the per-node resource model.

Round, transmission and computation bounds are exact integers. Energy figures
are in nJ and use floats since the constants are physical.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .digraph import Digraph
    from .engine import RunReport

__all__ = [
    "ComplianceRecord",
    "EnergyParams",
    "ResourceReport",
    "bit_width",
    "ceil_log2",
    "compare_run",
    "computation_bound",
    "convergence_bound",
    "energy_comp",
    "energy_sense",
    "energy_total",
    "energy_trans",
    "memory_requirement",
    "transmission_bound",
]


def ceil_log2(x: int) -> int:
    """``ceil(log2(x))`` for integers; inputs below 1 are treated as 1 (result 0)."""
    if x <= 1:
        return 0
    return (int(x) - 1).bit_length()


def bit_width(n: int, sum_abs_y: int) -> int:
    """Bits needed for one ``(y, z)`` pair: ``ceil(log2 n) + ceil(log2 sum|y|)``."""
    return ceil_log2(n) + ceil_log2(sum_abs_y)


def convergence_bound(n: int, m: int) -> int:
    return n * n + (n - 1) * m * m


def transmission_bound(n: int, m: int) -> int:
    return n + (n - 1) * m


def computation_bound(n: int, m: int, d_max_in: int) -> int:
    return 1 + (n - 1) * (m + 1 + d_max_in)


def memory_requirement(n: int, d_in_j: int, sum_abs_y: int) -> tuple[int, int]:
    """Integer storage slots and bits a node needs, given its in-degree."""
    slots = 7 + 4 * d_in_j
    per = 3 + 2 * d_in_j
    bits = 2 + per * ceil_log2(n) + per * ceil_log2(sum_abs_y)
    return slots, bits


@dataclass(frozen=True)
class EnergyParams:
    alpha3: float = 50.0  # sensing, nJ/bit
    alpha4: float = 5.0  # processing, nJ/bit
    alpha11: float = 45.0  # transmit electronics, nJ/bit
    alpha2: float = 135.0  # transmit amplifier, nJ/bit
    distance: float = 1.0  # metres, same for every out-neighbor
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        for name in ("alpha3", "alpha4", "alpha11", "alpha2", "distance"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.path_loss_exponent < 1:
            raise ValueError("path_loss_exponent must be at least 1")


def energy_sense(n: int, m: int, d_max_in: int, A: int, params: EnergyParams = EnergyParams()) -> float:
    return float(params.alpha3 * (m + 1 + d_max_in) * (n - 1) * A)


def energy_comp(n: int, d_max_in: int, A: int, params: EnergyParams = EnergyParams()) -> float:
    return float(params.alpha4 * (1 + 2 * d_max_in**2) * (n - 1) * A)


def energy_trans(n: int, m: int, A: int, params: EnergyParams = EnergyParams()) -> float:
    per_bit = params.alpha11 + params.alpha2 * params.distance**params.path_loss_exponent
    return float((n - 1) * per_bit * (m + 1) * A)


@dataclass(frozen=True)
class ResourceReport:
    n: int
    m: int
    d_max_in: int
    sum_abs_y: int
    convergence_bound: int
    tx_bound: int
    comp_bound: int
    memory_slots: int
    memory_bits: int
    bit_width: int
    p_sense: float
    p_comp: float
    p_trans: float
    p_total: float
    log2_convention: str = "ceil(log2 x) = 0 for x <= 1"

    def to_dict(self) -> dict:
        return asdict(self)


def energy_total(
    n: int,
    m: int,
    d_max_in: int,
    initial_values: Sequence[int],
    params: EnergyParams = EnergyParams(),
    d_in_j: int | None = None,
) -> ResourceReport:
    """Assemble all worst-case figures for one node.

    Memory is reported for in-degree ``d_in_j``, defaulting to ``d_max_in``
    (the worst node).
    """
    sum_abs = sum(abs(int(v)) for v in initial_values)
    A = bit_width(n, sum_abs)
    slots, bits = memory_requirement(n, d_max_in if d_in_j is None else d_in_j, sum_abs)
    ps = energy_sense(n, m, d_max_in, A, params)
    pc = energy_comp(n, d_max_in, A, params)
    pt = energy_trans(n, m, A, params)
    return ResourceReport(
        n=n,
        m=m,
        d_max_in=d_max_in,
        sum_abs_y=sum_abs,
        convergence_bound=convergence_bound(n, m),
        tx_bound=transmission_bound(n, m),
        comp_bound=computation_bound(n, m, d_max_in),
        memory_slots=slots,
        memory_bits=bits,
        bit_width=A,
        p_sense=ps,
        p_comp=pc,
        p_trans=pt,
        p_total=ps + pc + pt,
    )


def resources_for(g: Digraph, initial_values: Sequence[int], params: EnergyParams = EnergyParams()) -> ResourceReport:
    return energy_total(g.n, g.m, g.max_in_degree, initial_values, params)


@dataclass
class ComplianceRecord:
    convergence_bound: int
    tx_bound: int
    comp_bound: int
    observed_rounds: int
    max_tx: int
    max_comp: int
    flags: list[str] = field(default_factory=list)

    @property
    def compliant(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        d = asdict(self)
        d["compliant"] = self.compliant
        return d


def check_bounds(
    n: int,
    m: int,
    d_max_in: int,
    converged_round: int,
    tx_counts: Sequence[int],
    comp_counts: Sequence[int],
) -> ComplianceRecord:
    rec = ComplianceRecord(
        convergence_bound=convergence_bound(n, m),
        tx_bound=transmission_bound(n, m),
        comp_bound=computation_bound(n, m, d_max_in),
        observed_rounds=converged_round,
        max_tx=max(tx_counts, default=0),
        max_comp=max(comp_counts, default=0),
    )
    if converged_round > rec.convergence_bound:
        rec.flags.append(f"convergence round {converged_round} > bound {rec.convergence_bound}")
    for j, c in enumerate(tx_counts):
        if c > rec.tx_bound:
            rec.flags.append(f"node {j + 1}: {c} transmissions > bound {rec.tx_bound}")
    for j, c in enumerate(comp_counts):
        if c > rec.comp_bound:
            rec.flags.append(f"node {j + 1}: {c} computations > bound {rec.comp_bound}")
    return rec


def compare_run(report: RunReport, g: Digraph, params: EnergyParams | None = None) -> ComplianceRecord:
    """Flag every observed quantity of ``report`` that exceeds its bound on ``g``.

    ``params`` is accepted for symmetry with the resource model; the energy
    figures are worst-case only and produce no flags.
    """
    return check_bounds(g.n, g.m, g.max_in_degree, report.converged_round, report.tx_count, report.comp_count)
