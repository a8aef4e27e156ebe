"""Decay-weighted SWAP routing.

The router alternates between executing every front-layer gate whose operands
are coupled and inserting the candidate SWAP with the lowest heuristic cost.
``route_baseline`` is the same loop with decay frozen (delta = 0), which
reduces the heuristic to nearest-neighbour cost with lookahead.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .circuit_ir import Circuit, CircuitDag, Gate, GateKind, build_dag, decompose_swap, depth
from .device import DeviceModel, RoutingCostTable, edge_weight
from .thim import Mapping

log = logging.getLogger(__name__)


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RouterParams:
    mu: float = 0.5
    delta: float = 1e-3
    decompose_swaps: bool = True
    decay_reset: int = 0  # reset decay after this many SWAPs; 0 = never
    guard_factor: int = 3
    no_repeat: bool = True  # skip edges already swapped since the last execution

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


@dataclass
class RouterState:
    l2p: list[int]
    p2l: dict[int, int]
    front: list[int]
    lookahead: list[int]
    decay: np.ndarray
    executed: list[Gate] = field(default_factory=list)
    swap_count: int = 0
    swaps_on: np.ndarray | None = None

    @classmethod
    def start(cls, mapping: Mapping) -> "RouterState":
        l2p = list(mapping.logical_to_physical)
        n = len(l2p)
        return cls(l2p, {p: q for q, p in enumerate(l2p)}, [], [], np.ones(n),
                   swaps_on=np.zeros(n, dtype=int))

    def apply_swap(self, a: int, b: int) -> tuple[int | None, int | None]:
        qa, qb = self.p2l.pop(a, None), self.p2l.pop(b, None)
        if qa is not None:
            self.l2p[qa] = b
            self.p2l[b] = qa
        if qb is not None:
            self.l2p[qb] = a
            self.p2l[a] = qb
        return qa, qb


@dataclass
class RoutedCircuit:
    circuit: Circuit  # physical indices
    initial_mapping: Mapping
    final_mapping: Mapping
    swaps_inserted: int
    decay: list[float]
    swap_involvement: list[int]
    guard_trips: int = 0

    @property
    def two_qubit_gates(self) -> int:
        return self.circuit.count_two_qubit()

    @property
    def depth(self) -> int:
        return depth(self.circuit)

    def metrics(self) -> dict:
        return {
            "two_qubit_gates": self.two_qubit_gates,
            "depth": self.depth,
            "swaps": self.swaps_inserted,
            "final_layout": list(self.final_mapping.logical_to_physical),
        }


def front_layer(dag: CircuitDag, executed: set[int]) -> list[int]:
    """Unexecuted gates whose predecessors have all executed, by program index."""
    return [
        i for i in range(len(dag.nodes))
        if i not in executed and all(p in executed for p in dag.preds[i])
    ]


def _next_two_qubit(dag: CircuitDag) -> list[list[int]]:
    """For each gate, the nearest two-qubit successors, looking through 1q gates."""
    out: list[list[int]] = [[] for _ in dag.nodes]
    nxt: dict[int, int] = {}
    for i in range(len(dag.nodes) - 1, -1, -1):
        g = dag.nodes[i]
        out[i] = sorted({nxt[q] for q in g.qubits if q in nxt})
        if g.is_two_qubit:
            for q in g.qubits:
                nxt[q] = i
    return out


def candidate_swaps(front2q: list[Gate], l2p, device: DeviceModel,
                    region: set[int] | None = None) -> list[tuple[int, int]]:
    """Coupling edges touching any physical qubit that hosts a front-gate operand."""
    hosts = {l2p[q] for g in front2q for q in g.qubits}
    out = set()
    for p in hosts:
        for nb in device.neighbors(p):
            if region is None or nb in region:
                out.add((min(p, nb), max(p, nb)))
    return sorted(out)


def heuristic_h(swap: tuple[int, int], front2q: list[Gate], lookahead: list[Gate],
                l2p, p2l: dict[int, int], decay, dmat: np.ndarray, mu: float) -> float:
    """Decay-weighted mean routing cost of front and lookahead gates after ``swap``."""
    a, b = swap
    qa, qb = p2l.get(a), p2l.get(b)

    def pos(q: int) -> int:
        if q == qa:
            return b
        if q == qb:
            return a
        return l2p[q]

    f = sum(dmat[pos(g.qubits[0]), pos(g.qubits[1])] for g in front2q) / len(front2q)
    e = 0.0
    if lookahead and mu:
        e = mu * sum(dmat[pos(g.qubits[0]), pos(g.qubits[1])] for g in lookahead) / len(lookahead)
    weight = max(decay[qa] if qa is not None else 1.0, decay[qb] if qb is not None else 1.0)
    return weight * (f + e)


def _region_diameter(device: DeviceModel, region: set[int]) -> int:
    sub = device.graph.subgraph(region)
    if len(region) <= 1:
        return 0
    if not nx.is_connected(sub):
        raise RoutingError(f"routing region {sorted(region)} is disconnected")
    return nx.diameter(sub)


def route(dag: CircuitDag, m0: Mapping, device: DeviceModel, costs: RoutingCostTable,
          params: RouterParams | None = None, region=None) -> RoutedCircuit:
    """Route ``dag`` onto ``device`` starting from ``m0``.

    ``region`` restricts SWAPs to a set of physical qubits (the partition); by
    default the image of ``m0`` plus every qubit reachable from it is used.
    MEASURE gates are held back and emitted at the end on the final mapping.
    ``costs`` should be built over the same region; distances through qubits
    outside it can steer the search towards moves it is not allowed to make.
    """
    params = params or RouterParams()
    n = dag.num_qubits
    if len(m0) < n:
        raise RoutingError(f"mapping covers {len(m0)} of {n} logical qubits")
    if region is None:
        seed = m0.logical_to_physical[0] if len(m0) else 0
        region = set(nx.node_connected_component(device.graph, seed))
    region = set(region)
    if not set(m0.logical_to_physical) <= region:
        raise RoutingError("initial mapping leaves the routing region")
    guard = params.guard_factor * max(1, _region_diameter(device, region))
    region_graph = nx.Graph()
    region_graph.add_nodes_from(region)
    for e in device.edges:
        if e.q0 in region and e.q1 in region:
            region_graph.add_edge(e.q0, e.q1, w=edge_weight(e))
    dmat = costs.matrix
    nodes = dag.nodes
    look = _next_two_qubit(dag)

    state = RouterState.start(m0)
    remaining = [len(p) for p in dag.preds]
    ready = sorted(i for i, r in enumerate(remaining) if r == 0)
    measures: list[Gate] = []
    out: list[Gate] = []
    guard_trips = 0
    since_exec = 0
    swaps_since_reset = 0
    used_edges: set[tuple[int, int]] = set()
    decay_count = np.zeros(n, dtype=int)

    def finish(i: int, newly: list[int]):
        for s in dag.succs[i]:
            remaining[s] -= 1
            if remaining[s] == 0:
                newly.append(s)

    def emit_swap(a: int, b: int):
        nonlocal swaps_since_reset
        qa, qb = state.apply_swap(a, b)
        sw = Gate(GateKind.SWAP, (a, b))
        out.extend(decompose_swap(sw) if params.decompose_swaps else [sw])
        state.swap_count += 1
        for q in (qa, qb):
            if q is not None:
                state.swaps_on[q] += 1
                decay_count[q] += 1
        swaps_since_reset += 1
        if params.decay_reset and swaps_since_reset >= params.decay_reset:
            decay_count[:] = 0
            swaps_since_reset = 0
        # 1 + delta * count, not a running sum, so the bookkeeping stays exact
        state.decay[:] = 1.0 + params.delta * decay_count

    while ready:
        # execute everything executable, repeatedly
        progressed = True
        while progressed:
            progressed = False
            blocked: list[int] = []
            newly: list[int] = []
            for i in sorted(ready):
                g = nodes[i]
                if g.kind is GateKind.MEASURE:
                    measures.append(g)
                elif g.is_two_qubit:
                    a, b = (state.l2p[q] for q in g.qubits)
                    if not device.has_edge(a, b):
                        blocked.append(i)
                        continue
                    out.append(g.on(a, b))
                else:
                    out.append(g.on(*(state.l2p[q] for q in g.qubits)))
                state.executed.append(g)
                finish(i, newly)
                progressed = True
            ready = blocked + newly
            if progressed:
                since_exec = 0
                used_edges.clear()
        if not ready:
            break

        front = [nodes[i] for i in ready]
        state.front = ready[:]
        ahead = sorted({s for i in ready for s in look[i]})
        state.lookahead = ahead
        ahead_gates = [nodes[i] for i in ahead]

        if since_exec >= guard:
            guard_trips += 1
            log.warning("progress guard tripped after %d SWAPs without execution", since_exec)
            g = min(front, key=lambda g: (dmat[state.l2p[g.qubits[0]], state.l2p[g.qubits[1]]],
                                          g.index))
            src, dst = (state.l2p[q] for q in g.qubits)
            path = nx.shortest_path(region_graph, src, dst, weight="w")
            for a, b in zip(path[:-2], path[1:-1]):
                emit_swap(a, b)
            since_exec = 0
            continue

        cands = candidate_swaps(front, state.l2p, device, region)
        mu, scored = params.mu, front
        if params.no_repeat:
            fresh = [e for e in cands if e not in used_edges]
            if fresh:
                cands = fresh
            else:
                # every candidate was already tried: chase the closest front gate alone
                mu = 0.0
                scored = [min(front, key=lambda g: (
                    dmat[state.l2p[g.qubits[0]], state.l2p[g.qubits[1]]], g.index))]
        best = min(
            cands,
            key=lambda e: (heuristic_h(e, scored, ahead_gates, state.l2p, state.p2l,
                                       state.decay, dmat, mu), e),
        )
        emit_swap(*best)
        used_edges.add(best)
        since_exec += 1

    final = Mapping(tuple(state.l2p))
    out.extend(g.on(final[g.qubits[0]]) for g in measures)
    routed = Circuit(device.num_qubits, tuple(out), "routed")
    return RoutedCircuit(
        routed, m0, final, state.swap_count, state.decay.tolist(),
        state.swaps_on.tolist(), guard_trips,
    )


def route_baseline(dag: CircuitDag, m0: Mapping, device: DeviceModel,
                   costs: RoutingCostTable, params: RouterParams | None = None,
                   region=None) -> RoutedCircuit:
    """Same loop with decay frozen at 1; pass costs built with eta = 0."""
    params = params or RouterParams()
    frozen = RouterParams(params.mu, 0.0, params.decompose_swaps, 0, params.guard_factor,
                          params.no_repeat)
    return route(dag, m0, device, costs, frozen, region)


def route_circuit(circuit: Circuit, m0: Mapping, device: DeviceModel,
                  costs: RoutingCostTable, params: RouterParams | None = None,
                  region=None, baseline: bool = False) -> RoutedCircuit:
    fn = route_baseline if baseline else route
    rc = fn(build_dag(circuit), m0, device, costs, params, region)
    rc.circuit = Circuit(rc.circuit.num_qubits, rc.circuit.gates, circuit.name)
    return rc


def is_conformant(circuit: Circuit, device: DeviceModel) -> bool:
    return all(device.has_edge(*g.qubits) for g in circuit.gates if g.is_two_qubit)
