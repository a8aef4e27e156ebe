"""Density-matrix and statevector simulation with calibration-derived noise.

Qubit 0 is the most significant tensor factor: on two qubits the basis order is
|q0 q1>, so CX(0, 1)|10> = |11>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit_ir import Circuit, Gate, GateKind
from .device import CalibrationRecord, DeviceModel

DENSITY_CAP = 6
STATEVECTOR_CAP = 20

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class SimulationError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


# --- channels -----------------------------------------------------------------

@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must be square and share one dimension")
        object.__setattr__(self, "operators", ops)
        err = completeness_error(self)
        if err > 1e-12:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.3e})")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)


def completeness_error(ch: KrausChannel) -> float:
    """Max-abs deviation of sum K^dag K from the identity."""
    total = sum(k.conj().T @ k for k in ch.operators)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def _check_prob(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} = {p} outside [0, 1]")
    return p


def depolarizing(p: float) -> KrausChannel:
    p = _check_prob(p, "depolarizing probability")
    if p == 0:
        return KrausChannel((I2,))
    s = math.sqrt(p / 3)
    return KrausChannel((math.sqrt(1 - p) * I2, s * X, s * Y, s * Z))


def dephasing(gamma: float) -> KrausChannel:
    gamma = _check_prob(gamma, "dephasing probability")
    if gamma == 0:
        return KrausChannel((I2,))
    return KrausChannel((math.sqrt(1 - gamma) * I2, math.sqrt(gamma) * Z))


def amplitude_damping(lam: float) -> KrausChannel:
    lam = _check_prob(lam, "damping probability")
    if lam == 0:
        return KrausChannel((I2,))
    k0 = np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(lam)], [0, 0]], dtype=complex)
    return KrausChannel((k0, k1))


def channel_params_from_calibration(rec: CalibrationRecord, t: float) -> dict[str, float]:
    """Damping and dephasing probabilities for a qubit idling ``t`` us.

    Composing both multiplies the coherence by exp(-t / T2).
    """
    if t < 0:
        raise ValueError(f"duration must be non-negative, got {t}")
    lam = -math.expm1(-t / rec.t1)
    rate_phi = max(0.0, 1.0 / rec.t2 - 1.0 / (2.0 * rec.t1))
    gamma = -math.expm1(-t * rate_phi) / 2.0
    return {"gamma": gamma, "lambda": lam}


@dataclass(frozen=True)
class NoiseSpec:
    """Which channels to attach after each gate, and the 1q gate duration."""

    depolarizing: bool = True
    thermal: bool = True
    single_qubit_duration_ns: float = 35.0

    def __post_init__(self):
        if self.single_qubit_duration_ns < 0:
            raise ValueError("single_qubit_duration_ns must be >= 0")

    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls(depolarizing=False, thermal=False)

    def gate_params(self, gate: Gate, dev: DeviceModel, qubits) -> dict[int, dict[str, float]]:
        """Per-qubit {P, gamma, lambda} after ``gate``, for each qubit in ``qubits``."""
        if gate.is_two_qubit:
            if not dev.has_edge(*gate.qubits):
                raise SimulationError(f"{gate} acts on uncoupled qubits of {dev.name!r}")
            edge = dev.edge(*gate.qubits)
            dur_us = edge.gate_duration / 1000.0
            p_gate = edge.two_qubit_error
        else:
            dur_us = self.single_qubit_duration_ns / 1000.0
            p_gate = dev.qubits[gate.qubits[0]].single_qubit_error
        out = {}
        for q in qubits:
            params = {"P": 0.0, "gamma": 0.0, "lambda": 0.0}
            if self.depolarizing and q in gate.qubits:
                params["P"] = p_gate
            if self.thermal:
                params.update(channel_params_from_calibration(dev.qubits[q], dur_us))
            for k, v in params.items():
                _check_prob(v, k)
            out[q] = params
        return out


# --- states -------------------------------------------------------------------

@dataclass
class DensityMatrix:
    rho: np.ndarray
    qubits: tuple[int, ...] = ()  # physical labels of the tensor factors

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        d = self.rho.shape[0]
        if self.rho.shape != (d, d) or d & (d - 1) or d == 0:
            raise InvalidStateError(f"density matrix must be 2^n square, got {self.rho.shape}")
        if not self.qubits:
            self.qubits = tuple(range(self.num_qubits))

    @property
    def num_qubits(self) -> int:
        return self.rho.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def zero(cls, n: int, qubits=()) -> "DensityMatrix":
        rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
        rho[0, 0] = 1
        return cls(rho, tuple(qubits))

    @classmethod
    def from_statevector(cls, psi: np.ndarray, qubits=()) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), tuple(qubits))

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def validate(self, tol: float = 1e-10) -> None:
        r = self.rho
        if np.max(np.abs(r - r.conj().T)) > tol:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1) > tol:
            raise InvalidStateError(f"density matrix trace {np.trace(r).real:.12g} != 1")
        if np.linalg.eigvalsh((r + r.conj().T) / 2).min() < -tol:
            raise InvalidStateError("density matrix has a negative eigenvalue")


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    return psi


# --- gate unitaries -----------------------------------------------------------

def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t):
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex)


_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def gate_unitary(gate: Gate) -> np.ndarray:
    k = gate.kind
    fixed = {GateKind.H: H, GateKind.X: X, GateKind.Y: Y, GateKind.Z: Z,
             GateKind.CX: _CX, GateKind.CZ: _CZ, GateKind.SWAP: _SWAP}
    if k in fixed:
        return fixed[k]
    if k is GateKind.RX:
        return _rx(gate.params[0])
    if k is GateKind.RY:
        return _ry(gate.params[0])
    if k is GateKind.RZ:
        return _rz(gate.params[0])
    raise SimulationError(f"no unitary for gate kind {k.name}")


def _apply_to_axes(tensor: np.ndarray, op: np.ndarray, axes: list[int]) -> np.ndarray:
    """Contract ``op`` (2^k x 2^k) into the listed tensor axes."""
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    moved = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(moved, list(range(k)), axes)


def _local(gate: Gate, index: dict[int, int] | None) -> list[int]:
    return [index[q] if index is not None else q for q in gate.qubits]


def apply_gate(state, gate: Gate, index: dict[int, int] | None = None):
    """Apply ``gate`` to a statevector (1-D array) or a DensityMatrix.

    ``index`` maps the gate's qubit labels to tensor positions (identity if None).
    """
    u = gate_unitary(gate)
    pos = _local(gate, index)
    if isinstance(state, DensityMatrix):
        n = state.num_qubits
        if max(pos) >= n:
            raise SimulationError(f"gate {gate} does not fit a {n}-qubit state")
        t = state.rho.reshape((2,) * (2 * n))
        t = _apply_to_axes(t, u, pos)
        t = _apply_to_axes(t, u.conj(), [n + p for p in pos])
        return DensityMatrix(t.reshape(state.dim, state.dim), state.qubits)
    psi = np.asarray(state, dtype=complex)
    n = psi.size.bit_length() - 1
    if psi.ndim != 1 or psi.size != 2 ** n:
        raise SimulationError(f"statevector length {psi.size} is not a power of two")
    if max(pos) >= n:
        raise SimulationError(f"gate {gate} does not fit a {n}-qubit state")
    return _apply_to_axes(psi.reshape((2,) * n), u, pos).reshape(-1)


def apply_channel(state: DensityMatrix, ch: KrausChannel, target: int) -> DensityMatrix:
    n = state.num_qubits
    if ch.dim != 2:
        raise SimulationError(f"expected a single-qubit channel, got dimension {ch.dim}")
    if not 0 <= target < n:
        raise SimulationError(f"target {target} outside a {n}-qubit state")
    t = state.rho.reshape((2,) * (2 * n))
    out = np.zeros_like(t)
    for k in ch.operators:
        out += _apply_to_axes(_apply_to_axes(t, k, [target]), k.conj(), [n + target])
    return DensityMatrix(out.reshape(state.dim, state.dim), state.qubits)


# --- fidelity -----------------------------------------------------------------

def _as_density(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return x.rho
    x = np.asarray(x, dtype=complex)
    return np.outer(x, x.conj()) if x.ndim == 1 else x


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """Tr sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1].

    Either argument may be a DensityMatrix, a matrix or a statevector.
    """
    r, s = _as_density(rho), _as_density(sigma)
    if r.shape != s.shape:
        raise InvalidStateError(f"shape mismatch {r.shape} vs {s.shape}")
    for m in (r, s):
        DensityMatrix(m).validate(1e-8)
    sr = _psd_sqrt(r)
    inner = sr @ s @ sr
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    f = float(np.sum(np.sqrt(np.clip(w, 0, None))))
    return min(1.0, max(0.0, f))


def state_fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 for pure states."""
    return float(abs(np.vdot(psi, phi)) ** 2)


# --- circuit simulation -------------------------------------------------------

def _sim_qubits(circuit: Circuit, qubits) -> list[int]:
    if qubits is not None:
        return list(qubits)
    return circuit.active_qubits()


def _gates(circuit: Circuit):
    return [g for g in circuit.gates if not g.kind.is_directive]


def simulate_statevector(circuit: Circuit, qubits=None,
                         cap: int = STATEVECTOR_CAP) -> tuple[np.ndarray, list[int]]:
    """Noiseless run from |0...0> over ``qubits`` (default: those the circuit touches).

    Returns the final state and the qubit label of each tensor factor.
    """
    qs = _sim_qubits(circuit, qubits)
    if len(qs) > cap:
        raise SimulationError(f"{len(qs)} qubits exceed the statevector cap of {cap}")
    index = {q: i for i, q in enumerate(qs)}
    psi = zero_state(len(qs))
    for g in _gates(circuit):
        psi = apply_gate(psi, g, index)
    return psi, qs


def simulate_noisy(circuit: Circuit, dev: DeviceModel, spec: NoiseSpec | None = None,
                   qubits=None, cap: int = DENSITY_CAP) -> DensityMatrix:
    """Density-matrix run of a circuit at physical indices.

    After each gate: depolarizing on its operands (gate error), then amplitude
    damping and dephasing for the gate's duration on every simulated qubit.
    MEASURE and BARRIER are skipped.
    """
    spec = spec or NoiseSpec()
    qs = _sim_qubits(circuit, qubits)
    if len(qs) > cap:
        raise SimulationError(f"{len(qs)} qubits exceed the density-matrix cap of {cap}")
    if qs and max(qs) >= dev.num_qubits:
        raise SimulationError(f"qubit {max(qs)} is not on device {dev.name!r}")
    index = {q: i for i, q in enumerate(qs)}
    state = DensityMatrix.zero(len(qs), qs)
    for g in _gates(circuit):
        state = apply_gate(state, g, index)
        if not (spec.depolarizing or spec.thermal):
            continue
        for q, params in spec.gate_params(g, dev, qs).items():
            if params["P"]:
                state = apply_channel(state, depolarizing(params["P"]), index[q])
            if params["lambda"]:
                state = apply_channel(state, amplitude_damping(params["lambda"]), index[q])
            if params["gamma"]:
                state = apply_channel(state, dephasing(params["gamma"]), index[q])
    return state


def noisy_fidelity(circuit: Circuit, dev: DeviceModel, spec: NoiseSpec | None = None,
                   cap: int = DENSITY_CAP) -> float:
    """Uhlmann fidelity of the noisy output against the same circuit run noiselessly."""
    qs = circuit.active_qubits()
    rho = simulate_noisy(circuit, dev, spec, qs, cap)
    psi, _ = simulate_statevector(circuit, qs)
    return uhlmann_fidelity(rho, psi)


def product_state_prep(angles) -> list[Gate]:
    """RY(theta) then RZ(phi) on logical qubit i for each (theta, phi) in ``angles``."""
    out = []
    for q, (theta, phi) in enumerate(angles):
        out.append(Gate(GateKind.RY, (q,), (float(theta),)))
        out.append(Gate(GateKind.RZ, (q,), (float(phi),)))
    return out


def routed_equivalence(original: Circuit, routed: Circuit, initial, final,
                       prep_angles=None) -> float:
    """Statevector fidelity between ``original`` and ``routed`` after undoing the layout.

    ``initial`` and ``final`` give the physical home of each logical qubit before
    and after routing. ``prep_angles`` optionally prepares a product input state
    (see ``product_state_prep``) on the logical qubits and, through ``initial``,
    on their physical homes. Physical qubits hosting no logical qubit start and
    must end in |0>, so the routed state is compared with original (x) |0...0>.
    """
    n = original.num_qubits
    initial, final = list(initial), list(final)
    prep = product_state_prep(prep_angles) if prep_angles is not None else []
    logical = Circuit(n, tuple(prep) + original.gates, original.name)
    psi, _ = simulate_statevector(logical, range(n))
    qs = sorted(set(routed.active_qubits()) | set(initial) | set(final))
    if len(qs) > STATEVECTOR_CAP:
        raise SimulationError(f"{len(qs)} physical qubits exceed the statevector cap")
    index = {q: i for i, q in enumerate(qs)}
    phi = zero_state(len(qs))
    for g in [g.on(initial[g.qubits[0]]) for g in prep] + _gates(routed):
        phi = apply_gate(phi, g, index)
    rest = [p for p in qs if p not in set(final)]
    order = [index[p] for p in final] + [index[p] for p in rest]
    phi = np.transpose(phi.reshape((2,) * len(qs)), order).reshape(-1)
    target = np.kron(psi, zero_state(len(rest)))
    return state_fidelity(target, phi)
