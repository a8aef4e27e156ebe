"""Initial placement from a time-weighted interaction heatmap.

Stages: reverse-ordered two-qubit gates -> heatmap -> routing-cost table ->
greedy pair assignment -> hill-climbing on the global cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit_ir import Circuit, Gate, build_dag, depth, reverse_two_qubit_order
from .cqtp import Partition
from .device import DeviceModel, RoutingCostTable, build_cost_table, dwell_time_for, normalize_t2


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class Heatmap:
    hm: np.ndarray
    phi: float

    @property
    def size(self) -> int:
        return self.hm.shape[0]


@dataclass(frozen=True)
class Mapping:
    """Injective logical -> physical assignment."""

    logical_to_physical: tuple[int, ...]

    def __post_init__(self):
        l2p = tuple(int(p) for p in self.logical_to_physical)
        if len(set(l2p)) != len(l2p):
            raise MappingError(f"mapping is not injective: {l2p}")
        object.__setattr__(self, "logical_to_physical", l2p)

    def __len__(self) -> int:
        return len(self.logical_to_physical)

    def __getitem__(self, q: int) -> int:
        return self.logical_to_physical[q]

    @property
    def physical_to_logical(self) -> dict[int, int]:
        return {p: q for q, p in enumerate(self.logical_to_physical)}

    def within(self, members) -> bool:
        return set(self.logical_to_physical) <= set(members)


def time_weight(k: int, total: int, phi: float) -> float:
    """exp(phi * (1 - k/total)); k = 1 is the last two-qubit gate executed."""
    if not 1 <= k <= total:
        raise ValueError(f"k={k} outside 1..{total}")
    if phi < 0:
        raise ValueError("phi must be >= 0")
    return math.exp(phi * (1 - k / total))


def build_heatmap(tg: list[Gate], num_logical: int, phi: float) -> Heatmap:
    hm = np.zeros((num_logical, num_logical))
    total = len(tg)
    for k, g in enumerate(tg, 1):
        a, b = g.qubits
        w = time_weight(k, total, phi)
        hm[a, b] += w
        hm[b, a] += w
    return Heatmap(hm, phi)


def global_cost(hm: Heatmap, costs: RoutingCostTable, mapping: Mapping) -> float:
    """Sum over logical pairs of heat times routing cost between their images."""
    l2p = np.asarray(mapping.logical_to_physical)
    d = costs.matrix[np.ix_(l2p, l2p)]
    return float(np.sum(np.triu(hm.hm * d, 1)))


def _mean_cost_to_rest(costs: RoutingCostTable, members) -> dict[int, float]:
    d = costs.matrix
    return {
        p: float(np.mean([d[p, o] for o in members if o != p])) if len(members) > 1 else 0.0
        for p in members
    }


def greedy_assign(hm: Heatmap, costs: RoutingCostTable, partition: Partition,
                  t2_scores: np.ndarray | None = None) -> Mapping:
    """Place hot logical pairs on cheap physical pairs, hottest first.

    A pair with one endpoint already placed puts the other on the free member
    cheapest to reach from it. Logical qubits with no two-qubit interaction fill
    the leftover members, longest T2 first.
    """
    n = hm.size
    members = sorted(partition.members)
    if n > len(members):
        raise MappingError(f"{n} logical qubits do not fit a {len(members)}-qubit partition")
    d = costs.matrix
    heat = hm.hm
    row_sum = heat.sum(axis=1)
    spread = _mean_cost_to_rest(costs, members)

    logical_pairs = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n) if heat[i, j] > 0),
        key=lambda p: (-heat[p], p),
    )
    physical_pairs = sorted(
        ((a, b) for ai, a in enumerate(members) for b in members[ai + 1:]),
        key=lambda p: (d[p], p),
    )

    l2p: dict[int, int] = {}
    used: set[int] = set()
    for qi, qj in logical_pairs:
        if qi in l2p and qj in l2p:
            continue
        if qi in l2p or qj in l2p:
            placed, free_q = (qi, qj) if qi in l2p else (qj, qi)
            anchor = l2p[placed]
            target = min((p for p in members if p not in used), key=lambda p: (d[anchor, p], p))
            l2p[free_q] = target
            used.add(target)
            continue
        pair = next(((a, b) for a, b in physical_pairs if a not in used and b not in used), None)
        if pair is None:
            break
        # busier logical qubit goes to the better-connected physical endpoint
        hot, cold = sorted((qi, qj), key=lambda q: (-row_sum[q], q))
        near, far = sorted(pair, key=lambda p: (spread[p], p))
        l2p[hot], l2p[cold] = near, far
        used.update(pair)

    if t2_scores is None:
        order = sorted(members)
    else:
        order = sorted(members, key=lambda p: (-t2_scores[p], p))
    free = [p for p in order if p not in used]
    for q in range(n):
        if q not in l2p:
            l2p[q] = free.pop(0)
    return Mapping(tuple(l2p[q] for q in range(n)))


def _climb(l2p: list[int], heat: np.ndarray, d: np.ndarray, members: list[int],
           budget: int) -> int:
    """First-improvement descent in place; returns the number of accepted moves."""
    n = len(l2p)
    taken = set(l2p)

    def move_delta(q: int, new: int, skip: int = -1) -> float:
        old = l2p[q]
        delta = 0.0
        for k in range(n):
            if k == q or k == skip or heat[q, k] == 0:
                continue
            delta += heat[q, k] * (d[new, l2p[k]] - d[old, l2p[k]])
        return delta

    accepted = 0
    while accepted < budget:
        found = False
        for a in range(n):
            for b in range(a + 1, n):
                # the (a, b) term keeps the same endpoints, so skip it
                if move_delta(a, l2p[b], skip=b) + move_delta(b, l2p[a], skip=a) < -1e-12:
                    l2p[a], l2p[b] = l2p[b], l2p[a]
                    found = True
                    break
            if not found:
                for p in members:
                    if p not in taken and move_delta(a, p) < -1e-12:
                        taken.discard(l2p[a])
                        l2p[a] = p
                        taken.add(p)
                        found = True
                        break
            if found:
                break
        if not found:
            break
        accepted += 1
    return accepted


def refine_mapping(m0: Mapping, hm: Heatmap, costs: RoutingCostTable, partition: Partition,
                   budget: int | None = None, kicks: int = 20, seed: int = 0) -> Mapping:
    """Lower the global cost by hill climbing with seeded restarts.

    Each climb takes improving exchanges of two logical qubits' placements or
    moves onto unused partition members, in first-improvement order, until none
    improves. The best mapping is then kicked (two random exchanges) and
    re-climbed ``kicks`` times; only strict improvements are kept.
    ``budget`` caps accepted moves over all climbs (default 10 * n^2). Never
    returns a mapping costlier than ``m0``.
    """
    n = len(m0)
    if budget is None:
        budget = 10 * n * n
    members = sorted(partition.members)
    d = costs.matrix
    heat = hm.hm

    best = list(m0.logical_to_physical)
    budget -= _climb(best, heat, d, members, budget)
    best_cost = global_cost(hm, costs, Mapping(tuple(best)))
    rng = np.random.default_rng(seed)
    for _ in range(kicks):
        if budget <= 0:
            break
        l2p = best[:]
        for _ in range(2):
            a = int(rng.integers(n))
            slots = [l2p[b] for b in range(n) if b != a] + [p for p in members if p not in l2p]
            if not slots:
                break
            p = slots[int(rng.integers(len(slots)))]
            if p in l2p:
                b = l2p.index(p)
                l2p[a], l2p[b] = l2p[b], l2p[a]
            else:
                l2p[a] = p
        budget -= _climb(l2p, heat, d, members, budget)
        c = global_cost(hm, costs, Mapping(tuple(l2p)))
        if c < best_cost - 1e-12:
            best, best_cost = l2p, c
    return Mapping(tuple(best))


def thim_initial_mapping(circuit: Circuit, device: DeviceModel, partition: Partition,
                         phi: float = 1.0, eta: float = 0.5, budget: int | None = None,
                         dwell_time: float | None = None, epsilon: float = 1e-8,
                         costs: RoutingCostTable | None = None,
                         dwell_mode: str = "layer") -> Mapping:
    if circuit.num_qubits > len(partition):
        raise MappingError(
            f"circuit width {circuit.num_qubits} exceeds partition size {len(partition)}"
        )
    scores = normalize_t2(device, epsilon)
    tg = reverse_two_qubit_order(build_dag(circuit))
    if not tg:
        order = sorted(partition.members, key=lambda p: (-scores[p], p))
        return Mapping(tuple(order[: circuit.num_qubits]))
    if costs is None:
        t = dwell_time_for(device, dwell_mode, depth(circuit)) if dwell_time is None else dwell_time
        costs = build_cost_table(device, eta, t, partition.members)
    hm = build_heatmap(tg, circuit.num_qubits, phi)
    m0 = greedy_assign(hm, costs, partition, scores)
    return refine_mapping(m0, hm, costs, partition, budget)
