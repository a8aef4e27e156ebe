"""Hardware coupling graph, calibration records and noise-aware distances."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

log = logging.getLogger(__name__)

UNREACHABLE = 1e12
SWAP_CX_COUNT = 3

BUNDLED_DEVICES = ("perth", "guadalupe", "brooklyn")


class DeviceError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationRecord:
    qubit: int
    t1: float  # microseconds
    t2: float  # microseconds
    readout_error: float
    single_qubit_error: float

    @property
    def t_phi(self) -> float:
        """Pure dephasing time from 1/T2 = 1/(2 T1) + 1/Tphi; inf when T2 = 2 T1."""
        rate = 1.0 / self.t2 - 1.0 / (2.0 * self.t1)
        return math.inf if rate <= 0 else 1.0 / rate


@dataclass(frozen=True)
class EdgeRecord:
    q0: int
    q1: int
    two_qubit_error: float
    gate_duration: float  # nanoseconds

    @property
    def endpoints(self) -> tuple[int, int]:
        return (min(self.q0, self.q1), max(self.q0, self.q1))

    @property
    def fidelity(self) -> float:
        return 1.0 - self.two_qubit_error


@dataclass(frozen=True)
class DeviceModel:
    name: str
    num_qubits: int
    qubits: tuple[CalibrationRecord, ...]
    edges: tuple[EdgeRecord, ...]

    def __post_init__(self):
        if len(self.qubits) != self.num_qubits:
            raise DeviceError(f"{self.num_qubits} qubits declared, {len(self.qubits)} records")
        if [r.qubit for r in self.qubits] != list(range(self.num_qubits)):
            raise DeviceError("qubit records must be ids 0..n-1 in order")
        seen = set()
        for e in self.edges:
            if e.q0 == e.q1:
                raise DeviceError(f"self-loop on qubit {e.q0}")
            if not (0 <= e.q0 < self.num_qubits and 0 <= e.q1 < self.num_qubits):
                raise DeviceError(f"edge {e.endpoints} outside 0..{self.num_qubits - 1}")
            if e.endpoints in seen:
                raise DeviceError(f"duplicate edge {e.endpoints}")
            seen.add(e.endpoints)
        g = nx.Graph()
        g.add_nodes_from(range(self.num_qubits))
        g.add_edges_from(e.endpoints for e in self.edges)
        object.__setattr__(self, "_graph", g)
        object.__setattr__(self, "_edge_map", {e.endpoints: e for e in self.edges})

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def edge(self, a: int, b: int) -> EdgeRecord:
        return self._edge_map[(min(a, b), max(a, b))]

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self._edge_map

    def neighbors(self, q: int) -> list[int]:
        return sorted(self._graph.neighbors(q))

    @property
    def t2(self) -> np.ndarray:
        return np.array([r.t2 for r in self.qubits])

    def mean_two_qubit_duration_us(self) -> float:
        if not self.edges:
            return 0.0
        return float(np.mean([e.gate_duration for e in self.edges])) / 1000.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "qubits": [
                {
                    "id": r.qubit,
                    "t1_us": r.t1,
                    "t2_us": r.t2,
                    "readout_error": r.readout_error,
                    "single_qubit_error": r.single_qubit_error,
                }
                for r in self.qubits
            ],
            "edges": [
                {
                    "q0": e.q0,
                    "q1": e.q1,
                    "two_qubit_error": e.two_qubit_error,
                    "gate_duration_ns": e.gate_duration,
                }
                for e in self.edges
            ],
        }


def _prob(value, what: str) -> float:
    v = float(value)
    if not 0.0 <= v < 1.0:
        raise DeviceError(f"{what} = {v} is not a probability in [0, 1)")
    return v


def device_from_dict(data: dict) -> DeviceModel:
    try:
        name = str(data.get("name", "device"))
        n = int(data["num_qubits"])
        raw_qubits = sorted(data["qubits"], key=lambda r: int(r["id"]))
        raw_edges = data["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DeviceError(f"calibration schema violation: {exc!r}") from None

    qubits = []
    for r in raw_qubits:
        try:
            qid, t1, t2 = int(r["id"]), float(r["t1_us"]), float(r["t2_us"])
            ro = _prob(r["readout_error"], f"qubit {qid} readout_error")
            sq = _prob(r["single_qubit_error"], f"qubit {qid} single_qubit_error")
        except (KeyError, TypeError) as exc:
            raise DeviceError(f"calibration schema violation in qubit record: {exc!r}") from None
        if not (t1 > 0 and t2 > 0):
            raise DeviceError(f"qubit {qid}: T1 and T2 must be positive (got {t1}, {t2})")
        if t2 > 2 * t1 * (1 + 1e-9):
            warnings.warn(
                f"qubit {qid}: T2={t2} exceeds 2*T1={2 * t1}; clamping T2 to 2*T1",
                stacklevel=2,
            )
            t2 = 2 * t1
        qubits.append(CalibrationRecord(qid, t1, t2, ro, sq))

    edges = []
    for r in raw_edges:
        try:
            q0, q1 = int(r["q0"]), int(r["q1"])
            err = _prob(r["two_qubit_error"], f"edge {q0}-{q1} two_qubit_error")
            dur = float(r["gate_duration_ns"])
        except (KeyError, TypeError) as exc:
            raise DeviceError(f"calibration schema violation in edge record: {exc!r}") from None
        if dur <= 0:
            raise DeviceError(f"edge {q0}-{q1}: gate_duration_ns must be positive")
        edges.append(EdgeRecord(q0, q1, err, dur))

    dev = DeviceModel(name, n, tuple(qubits), tuple(edges))
    if n > 1 and not nx.is_connected(dev.graph):
        warnings.warn(f"device {name!r} coupling graph is disconnected", stacklevel=2)
    return dev


def load_device(path) -> DeviceModel:
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED_DEVICES:
        return bundled_device(str(path))
    if not p.exists() and p.stem in BUNDLED_DEVICES and p.parent == Path("."):
        return bundled_device(p.stem)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DeviceError(f"{p}: not valid JSON ({exc})") from None
    return device_from_dict(data)


def bundled_device(name: str) -> DeviceModel:
    ref = resources.files("tram") / "data" / "devices" / f"{name}.json"
    return device_from_dict(json.loads(ref.read_text()))


# --- distances ----------------------------------------------------------------

def normalize_t2(dev: DeviceModel, epsilon: float = 1e-8) -> np.ndarray:
    """Min-max scaled T2 per qubit, shifted by ``epsilon`` so every score is > 0."""
    t2 = dev.t2
    lo, hi = t2.min(), t2.max()
    if hi - lo == 0:
        raise DeviceError("all T2 values are equal; normalization is undefined")
    return (t2 - lo) / (hi - lo) + epsilon


def edge_weight(edge: EdgeRecord) -> float:
    """Additive error cost -ln(1 - e) of one two-qubit gate on ``edge``."""
    if edge.two_qubit_error >= 1:
        raise DeviceError(f"edge {edge.endpoints}: two_qubit_error must be < 1")
    return -math.log1p(-edge.two_qubit_error)


def swap_weight(edge: EdgeRecord) -> float:
    return SWAP_CX_COUNT * edge_weight(edge)


def weight_matrix(dev: DeviceModel, within=None) -> csr_matrix:
    n = dev.num_qubits
    keep = None if within is None else set(within)
    rows, cols, vals = [], [], []
    for e in dev.edges:
        a, b = e.endpoints
        if keep is not None and not (a in keep and b in keep):
            continue
        w = edge_weight(e)
        rows += [a, b]
        cols += [b, a]
        vals += [w, w]
    return csr_matrix((vals, (rows, cols)), shape=(n, n))


def err_distance(dev: DeviceModel, within=None) -> np.ndarray:
    """All-pairs gate-error distance; unreachable pairs hold ``UNREACHABLE``.

    With ``within``, only edges between those qubits are used, so paths never
    leave the set. Zero-error edges are kept as explicit zeros (not dropped as missing).
    """
    n = dev.num_qubits
    w = weight_matrix(dev, within)
    # csgraph treats explicit zeros as absent edges; nudge them to a tiny positive
    # value and zero them again afterwards.
    tiny = np.nextafter(0.0, 1.0)
    data = w.data.copy()
    data[data == 0.0] = tiny
    w = csr_matrix((data, w.indices, w.indptr), shape=(n, n))
    d = shortest_path(w, method="D", directed=False)
    # the two directions sum the same path in different orders; pick one
    d = np.minimum(d, d.T)
    d[d < 1e-300] = 0.0
    d[np.isinf(d)] = UNREACHABLE
    return d


def hop_distance(dev: DeviceModel) -> np.ndarray:
    n = dev.num_qubits
    d = np.full((n, n), UNREACHABLE)
    for src, lengths in nx.all_pairs_shortest_path_length(dev.graph):
        for dst, hops in lengths.items():
            d[src, dst] = hops
    return d


def dwell_penalty(record: CalibrationRecord, t: float) -> float:
    """Dephasing failure probability 1 - exp(-t / T2) after dwelling for ``t`` us."""
    if t < 0:
        raise ValueError(f"dwell time must be non-negative, got {t}")
    return -math.expm1(-t / record.t2)


def default_dwell_time(dev: DeviceModel, circuit_depth: int) -> float:
    """Circuit depth times the mean two-qubit gate duration, in microseconds."""
    return circuit_depth * dev.mean_two_qubit_duration_us()


def layer_dwell_time(dev: DeviceModel) -> float:
    """Idle time of one two-qubit layer (mean gate duration, us)."""
    return dev.mean_two_qubit_duration_us()


def dwell_time_for(dev: DeviceModel, mode: str, circuit_depth: int) -> float:
    if mode == "layer":
        return layer_dwell_time(dev)
    if mode == "depth":
        return default_dwell_time(dev, circuit_depth)
    raise ValueError(f"unknown dwell mode {mode!r}; expected 'layer' or 'depth'")


@dataclass(frozen=True)
class RoutingCostTable:
    d_err: np.ndarray
    p: np.ndarray
    eta: float = 0.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        d = self.d_err + self.eta * (self.p[:, None] + self.p[None, :])
        d[self.d_err >= UNREACHABLE] = UNREACHABLE
        d.setflags(write=False)
        object.__setattr__(self, "_matrix", d)

    @property
    def matrix(self) -> np.ndarray:
        """Composite cost D for every physical pair."""
        return self._matrix

    @property
    def size(self) -> int:
        return len(self.p)


def routing_cost(table: RoutingCostTable, i: int, j: int) -> float:
    n = table.size
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"physical index out of range: ({i}, {j})")
    return float(table.matrix[i, j])


def build_cost_table(dev: DeviceModel, eta: float, dwell_time: float,
                     region=None) -> RoutingCostTable:
    """Cost table for routing; ``region`` confines distances to paths inside it."""
    p = np.array([dwell_penalty(r, dwell_time) for r in dev.qubits])
    return RoutingCostTable(err_distance(dev, region), p, eta)
