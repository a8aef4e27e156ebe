"""Calibration-aware community merging over the coupling graph.

The merge loop is a Fast-Newman style agglomeration whose score adds a T2
similarity term and a calibration-success term to the modularity gain. The
hierarchy builder runs it to the root; ``select_partition`` stops once a merged
community reaches the requested size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import networkx as nx
import numpy as np

from .device import DeviceModel, normalize_t2


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class RewardWeights:
    omega1: float = 0.5
    omega2: float = 0.5

    def __post_init__(self):
        for name in ("omega1", "omega2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class Community:
    members: frozenset[int]
    m: float

    @classmethod
    def of(cls, members, scores: np.ndarray) -> "Community":
        members = frozenset(members)
        if not members:
            raise ValueError("empty community")
        return cls(members, float(np.mean([scores[q] for q in sorted(members)])))

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MergeRecord:
    left: frozenset[int]
    right: frozenset[int]
    reward: float

    @property
    def members(self) -> frozenset[int]:
        return self.left | self.right


@dataclass
class HierarchyTree:
    leaves: tuple[int, ...]
    merges: list[MergeRecord] = field(default_factory=list)

    @property
    def roots(self) -> list[frozenset[int]]:
        alive = {frozenset([q]) for q in self.leaves}
        for rec in self.merges:
            alive -= {rec.left, rec.right}
            alive.add(rec.members)
        return sorted(alive, key=min)


@dataclass
class Partition:
    members: tuple[int, ...]
    reward_trail: list[float] = field(default_factory=list)
    weights: RewardWeights = field(default_factory=RewardWeights)

    def __len__(self) -> int:
        return len(self.members)

    def report(self, dev: DeviceModel) -> dict:
        return {
            "members": list(self.members),
            "reward_trail": list(self.reward_trail),
            "omega1": self.weights.omega1,
            "omega2": self.weights.omega2,
            "mean_t2_us": float(np.mean([dev.qubits[q].t2 for q in self.members])),
        }


def _as_graph(g) -> nx.Graph:
    return g.graph if isinstance(g, DeviceModel) else g


# --- score terms --------------------------------------------------------------

def modularity(communities, g) -> float:
    """Newman modularity Q = sum_i (e_ii - a_i^2).

    e_ii is the fraction of edges inside community i; each edge between i and j
    contributes half its fraction to e_ij and half to e_ji, so a_i is the share
    of edge endpoints in i.
    """
    g = _as_graph(g)
    m = g.number_of_edges()
    if m == 0:
        raise ValueError("modularity is undefined on a graph without edges")
    label = {}
    for i, c in enumerate(communities):
        for q in c:
            if q in label:
                raise ValueError(f"qubit {q} in more than one community")
            label[q] = i
    if set(label) != set(g.nodes):
        raise ValueError("communities must cover every vertex exactly once")
    k = len(communities)
    inside = np.zeros(k)
    ends = np.zeros(k)
    for u, v in g.edges:
        cu, cv = label[u], label[v]
        if cu == cv:
            inside[cu] += 1
        ends[cu] += 1
        ends[cv] += 1
    return float(np.sum(inside / m - (ends / (2 * m)) ** 2))


def t2_similarity(ci, cj) -> float:
    mi = ci.m if isinstance(ci, Community) else float(ci)
    mj = cj.m if isinstance(cj, Community) else float(cj)
    return (2 * mi * mj / (mi * mi + mj * mj)) * math.sqrt((mi + mj) / 2)


def error_term(ci: Community, cj: Community, dev: DeviceModel) -> float:
    """Mean of inter-community two-qubit success and member readout success."""
    links = [
        dev.edge(a, b).fidelity
        for a in sorted(ci.members)
        for b in sorted(cj.members)
        if dev.has_edge(a, b)
    ]
    if not links:
        raise PartitionError("communities share no coupling edge")
    e = float(np.mean(links))
    v = float(np.mean([1 - dev.qubits[q].readout_error for q in sorted(ci.members | cj.members)]))
    return (e + v) / 2


def _degree_share(members, g: nx.Graph) -> float:
    return sum(g.degree(q) for q in members) / (2 * g.number_of_edges())


def _links(ci, cj, g: nx.Graph) -> int:
    small, big = (ci, cj) if len(ci) <= len(cj) else (cj, ci)
    return sum(1 for a in small for b in g.neighbors(a) if b in big)


def modularity_gain(ci, cj, g) -> float:
    """Q(after merging ci and cj) - Q(before); independent of the other communities."""
    g = _as_graph(g)
    ci = ci.members if isinstance(ci, Community) else ci
    cj = cj.members if isinstance(cj, Community) else cj
    m = g.number_of_edges()
    return _links(ci, cj, g) / m - 2 * _degree_share(ci, g) * _degree_share(cj, g)


def reward(ci: Community, cj: Community, state, dev: DeviceModel, w: RewardWeights) -> float:
    """Merge score: modularity gain + omega1 * T2 similarity + omega2 * EV.

    ``state`` is the current community cover; the gain is computed as
    Q(cover with ci, cj merged) - Q(cover).
    """
    g = dev.graph
    if _links(ci.members, cj.members, g) == 0:
        raise PartitionError("reward is only defined for adjacent communities")
    cover = [frozenset(c.members if isinstance(c, Community) else c) for c in state]
    merged = [c for c in cover if c not in (ci.members, cj.members)]
    merged.append(ci.members | cj.members)
    dq = modularity(merged, g) - modularity(cover, g)
    return dq + w.omega1 * t2_similarity(ci, cj) + w.omega2 * error_term(ci, cj, dev)


# --- merge loop ---------------------------------------------------------------

class _MergeLoop:
    """Incremental merge state shared by the hierarchy builder and the selector."""

    def __init__(self, dev: DeviceModel, w: RewardWeights, epsilon: float):
        self.dev = dev
        self.g = dev.graph
        self.w = w
        self.scores = normalize_t2(dev, epsilon)
        self.communities = [Community.of([q], self.scores) for q in range(dev.num_qubits)]
        self.trails: dict[frozenset[int], list[float]] = {
            c.members: [] for c in self.communities
        }
        self.m = self.g.number_of_edges()

    def _score(self, ci: Community, cj: Community) -> float:
        dq = modularity_gain(ci.members, cj.members, self.g)
        return (
            dq
            + self.w.omega1 * t2_similarity(ci, cj)
            + self.w.omega2 * error_term(ci, cj, self.dev)
        )

    def candidates(self):
        """(reward, ci, cj) for every adjacent pair, in a fixed order."""
        cs = sorted(self.communities, key=lambda c: min(c.members))
        owner = {q: i for i, c in enumerate(cs) for q in c.members}
        pairs = set()
        for u, v in self.g.edges:
            a, b = owner[u], owner[v]
            if a != b:
                pairs.add((min(a, b), max(a, b)))
        return [(self._score(cs[a], cs[b]), cs[a], cs[b]) for a, b in sorted(pairs)]

    @staticmethod
    def best(cands):
        """Highest reward; ties go to the pair whose union has the smallest minimum."""
        return min(cands, key=lambda t: (-t[0], min(t[1].members | t[2].members),
                                          min(t[1].members), min(t[2].members)))

    def merge(self, f: float, ci: Community, cj: Community) -> Community:
        new = Community.of(ci.members | cj.members, self.scores)
        self.communities = [c for c in self.communities if c not in (ci, cj)]
        self.communities.append(new)
        self.trails[new.members] = self.trails[ci.members] + self.trails[cj.members] + [f]
        return new


def build_hierarchy(dev: DeviceModel, w: RewardWeights | None = None,
                    epsilon: float = 1e-8) -> HierarchyTree:
    """Merge adjacent communities greedily until no adjacent pair remains.

    A connected device yields a single root with n - 1 merges; a disconnected one
    yields one root per component.
    """
    w = w or RewardWeights()
    loop = _MergeLoop(dev, w, epsilon)
    tree = HierarchyTree(tuple(range(dev.num_qubits)))
    while True:
        cands = loop.candidates()
        if not cands:
            return tree
        f, ci, cj = loop.best(cands)
        loop.merge(f, ci, cj)
        tree.merges.append(MergeRecord(ci.members, cj.members, f))


def _qubit_quality(dev: DeviceModel, scores: np.ndarray, w: RewardWeights, q: int) -> float:
    return w.omega1 * scores[q] + w.omega2 * (1 - dev.qubits[q].readout_error)


def _trim(members: set[int], n_target: int, dev: DeviceModel, scores, w) -> set[int]:
    """Drop the weakest leaf qubits until ``n_target`` remain, keeping connectivity."""
    members = set(members)
    while len(members) > n_target:
        sub = dev.graph.subgraph(members)
        leaves = [q for q in members if sub.degree(q) <= 1]
        if not leaves:
            # no degree-1 vertex: fall back to any non-articulation vertex
            cut = set(nx.articulation_points(sub))
            leaves = [q for q in members if q not in cut]
        drop = min(leaves, key=lambda q: (_qubit_quality(dev, scores, w, q), -q))
        members.remove(drop)
    return members


def select_partition(dev: DeviceModel, n_target: int, w: RewardWeights | None = None,
                     epsilon: float = 1e-8) -> Partition:
    """Pick a connected set of ``n_target`` physical qubits by reward-driven merging."""
    w = w or RewardWeights()
    if not 1 <= n_target <= dev.num_qubits:
        raise PartitionError(f"n_target={n_target} outside 1..{dev.num_qubits}")
    loop = _MergeLoop(dev, w, epsilon)
    if n_target == 1:
        q = min(range(dev.num_qubits),
                key=lambda q: (-_qubit_quality(dev, loop.scores, w, q), q))
        return Partition((q,), [], w)

    while True:
        cands = loop.candidates()
        if not cands:
            raise PartitionError(f"no connected subgraph of {n_target} qubits exists")
        f, ci, cj = loop.best(cands)
        if len(ci) + len(cj) > n_target:
            fitting = [c for c in cands if len(c[1]) + len(c[2]) <= n_target]
            if fitting:
                f, ci, cj = loop.best(fitting)
            else:
                big = [c for c in loop.communities if len(c) >= n_target]
                if big:
                    base = min(big, key=lambda c: (len(c), min(c.members)))
                    trail = loop.trails[base.members]
                else:
                    base = loop.merge(f, ci, cj)
                    trail = loop.trails[base.members]
                kept = _trim(base.members, n_target, dev, loop.scores, w)
                return Partition(tuple(sorted(kept)), list(trail), w)
        new = loop.merge(f, ci, cj)
        if len(new) == n_target:
            return Partition(tuple(sorted(new.members)), list(loop.trails[new.members]), w)


def sweep_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid of weights, rounded to the step's decimal precision."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    digits = max(0, -int(math.floor(math.log10(step))) + 2)
    return [round(start + i * step, digits) for i in range(n)]


def weight_grid(start: float, stop: float, step: float) -> list[RewardWeights]:
    vals = sweep_grid(start, stop, step)
    return [RewardWeights(a, b) for a, b in product(vals, vals)]
