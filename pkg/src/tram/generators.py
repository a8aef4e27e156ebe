"""Circuit builders for the bundled benchmark corpus and for randomized tests."""
from __future__ import annotations

import math

import numpy as np

from .circuit_ir import Circuit, Gate, GateKind

PI = math.pi


class Builder:
    def __init__(self, n: int, name: str):
        self.n = n
        self.name = name
        self.gates: list[Gate] = []

    def _add(self, kind, qubits, params=()):
        self.gates.append(Gate(kind, tuple(qubits), tuple(params)))
        return self

    def h(self, q): return self._add(GateKind.H, (q,))
    def x(self, q): return self._add(GateKind.X, (q,))
    def y(self, q): return self._add(GateKind.Y, (q,))
    def z(self, q): return self._add(GateKind.Z, (q,))
    def rx(self, t, q): return self._add(GateKind.RX, (q,), (t,))
    def ry(self, t, q): return self._add(GateKind.RY, (q,), (t,))
    def rz(self, t, q): return self._add(GateKind.RZ, (q,), (t,))
    def cx(self, a, b): return self._add(GateKind.CX, (a, b))
    def cz(self, a, b): return self._add(GateKind.CZ, (a, b))
    def swap(self, a, b): return self._add(GateKind.SWAP, (a, b))

    def measure_all(self):
        for q in range(self.n):
            self._add(GateKind.MEASURE, (q,))
        return self

    def cphase(self, t, a, b):
        """Controlled phase up to a global phase."""
        self.rz(t / 2, a)
        self.cx(a, b)
        self.rz(-t / 2, b)
        self.cx(a, b)
        return self.rz(t / 2, b)

    def rzz(self, t, a, b):
        self.cx(a, b)
        self.rz(t, b)
        return self.cx(a, b)

    def ccx(self, a, b, c):
        """Toffoli with T gates written as rz(+-pi/4); exact up to a global phase."""
        t, tdg = PI / 4, -PI / 4
        self.h(c)
        self.cx(b, c).rz(tdg, c)
        self.cx(a, c).rz(t, c)
        self.cx(b, c).rz(tdg, c)
        self.cx(a, c).rz(t, b).rz(t, c).h(c)
        self.cx(a, b).rz(t, a).rz(tdg, b)
        return self.cx(a, b)

    def cswap(self, c, a, b):
        self.cx(b, a)
        self.ccx(c, a, b)
        return self.cx(b, a)

    def build(self) -> Circuit:
        return Circuit(self.n, tuple(self.gates), self.name)


# --- structured families ------------------------------------------------------

def ghz(n: int, name: str | None = None) -> Circuit:
    b = Builder(n, name or f"ghz_n{n}").h(0)
    for q in range(n - 1):
        b.cx(q, q + 1)
    return b.measure_all().build()


def bell_pairs(n: int, name: str | None = None) -> Circuit:
    b = Builder(n, name or f"bell_n{n}")
    for q in range(0, n - 1, 2):
        b.h(q).cx(q, q + 1)
    # rotate one half of each pair and entangle neighbouring pairs
    for q in range(0, n - 1, 2):
        b.ry(PI / 4, q + 1)
    for q in range(1, n - 1, 2):
        b.cx(q, q + 1)
    return b.measure_all().build()


def qft(n: int, name: str | None = None) -> Circuit:
    b = Builder(n, name or f"qft_n{n}")
    for q in range(n):
        b.x(q) if q % 2 == 0 else b.h(q)
    for i in range(n):
        b.h(i)
        for j in range(i + 1, n):
            b.cphase(PI / 2 ** (j - i), j, i)
    return b.measure_all().build()


def qaoa_ring(n: int, layers: int = 2, name: str | None = None) -> Circuit:
    b = Builder(n, name or f"qaoa_n{n}")
    for q in range(n):
        b.h(q)
    for layer in range(layers):
        gamma, beta = 0.4 + 0.3 * layer, 0.7 - 0.2 * layer
        for q in range(n):
            b.rzz(2 * gamma, q, (q + 1) % n)
        for q in range(n):
            b.rx(2 * beta, q)
    return b.measure_all().build()


def ripple_adder(bits: int, name: str | None = None) -> Circuit:
    """Carry-ripple adder of two ``bits``-bit registers: 2*bits + 2 qubits."""
    n = 2 * bits + 2
    b = Builder(n, name or f"adder_n{n}")
    cin, a, bb, cout = 0, list(range(1, 1 + bits)), list(range(1 + bits, 1 + 2 * bits)), n - 1
    for q in a[::2] + bb[1::2]:
        b.x(q)

    def maj(x, y, z):
        b.cx(z, y)
        b.cx(z, x)
        b.ccx(x, y, z)

    def uma(x, y, z):
        b.ccx(x, y, z)
        b.cx(z, x)
        b.cx(x, y)

    maj(cin, bb[0], a[0])
    for i in range(1, bits):
        maj(a[i - 1], bb[i], a[i])
    b.cx(a[-1], cout)
    for i in range(bits - 1, 0, -1):
        uma(a[i - 1], bb[i], a[i])
    uma(cin, bb[0], a[0])
    return b.measure_all().build()


def dnn(n: int, layers: int = 3, seed: int = 0, name: str | None = None) -> Circuit:
    rng = np.random.default_rng(seed)
    b = Builder(n, name or f"dnn_n{n}")
    for _ in range(layers):
        for q in range(n):
            b.ry(float(rng.uniform(0, PI)), q)
            b.rz(float(rng.uniform(0, PI)), q)
        for q in range(0, n - 1, 2):
            b.cx(q, q + 1)
        for q in range(1, n - 1, 2):
            b.cx(q, q + 1)
        if n > 2:
            b.cx(n - 1, 0)
    return b.measure_all().build()


def vqe_ucc(n: int, seed: int = 0, name: str | None = None) -> Circuit:
    """Hartree-Fock reference plus exponentiated Pauli strings via CX ladders."""
    rng = np.random.default_rng(seed)
    b = Builder(n, name or f"vqe_ucces_n{n}")
    for q in range(n // 2):
        b.x(q)
    for i in range(n // 2):
        for a in range(n // 2, n):
            lo, hi = sorted((i, a))
            theta = float(rng.uniform(-0.5, 0.5))
            b.rx(PI / 2, lo).h(hi)
            for q in range(lo, hi):
                b.cx(q, q + 1)
            b.rz(theta, hi)
            for q in range(hi - 1, lo - 1, -1):
                b.cx(q, q + 1)
            b.rx(-PI / 2, lo).h(hi)
    return b.measure_all().build()


def hardware_efficient(n: int, layers: int = 2, seed: int = 0,
                       name: str | None = None) -> Circuit:
    rng = np.random.default_rng(seed)
    b = Builder(n, name or f"vqe_n{n}")
    for _ in range(layers):
        for q in range(n):
            b.ry(float(rng.uniform(-PI, PI)), q).rz(float(rng.uniform(-PI, PI)), q)
        for q in range(n - 1):
            b.cz(q, q + 1) if q % 2 else b.cx(q, q + 1)
    for q in range(n):
        b.ry(float(rng.uniform(-PI, PI)), q)
    return b.measure_all().build()


def random_circuit(width: int, num_gates: int, rng: np.random.Generator,
                   two_qubit_fraction: float = 0.5, name: str = "random") -> Circuit:
    """Uniform mix of 1q gates (including rotations) and CX/CZ/SWAP on random pairs."""
    one = [GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.RX, GateKind.RY, GateKind.RZ]
    two = [GateKind.CX, GateKind.CX, GateKind.CX, GateKind.CZ, GateKind.SWAP]
    gates = []
    for _ in range(num_gates):
        if width >= 2 and rng.random() < two_qubit_fraction:
            a, b = (int(v) for v in rng.choice(width, 2, replace=False))
            gates.append(Gate(two[int(rng.integers(len(two)))], (a, b)))
        else:
            kind = one[int(rng.integers(len(one)))]
            params = (float(rng.uniform(-PI, PI)),) if kind.is_rotation else ()
            gates.append(Gate(kind, (int(rng.integers(width)),), params))
    return Circuit(width, tuple(gates), name)


def random_cx(width: int, num_gates: int, seed: int, name: str | None = None) -> Circuit:
    rng = np.random.default_rng(seed)
    b = Builder(width, name or f"random_cx_n{width}")
    for q in range(width):
        b.h(q)
    for _ in range(num_gates):
        a, c = (int(v) for v in rng.choice(width, 2, replace=False))
        b.cx(a, c)
        b.rz(float(rng.uniform(-PI, PI)), c)
    return b.measure_all().build()


# --- small named circuits -----------------------------------------------------

def deutsch() -> Circuit:
    return Builder(2, "deutsch_n2").x(1).h(0).h(1).cx(0, 1).h(0).measure_all().build()


def quantum_walk() -> Circuit:
    b = Builder(2, "quantumwalks_n2")
    for step in range(3):
        b.h(0).cx(0, 1).rz(PI / 4 * (step + 1), 1).cx(0, 1).x(0).cx(0, 1).x(0)
    return b.measure_all().build()


def basis_change() -> Circuit:
    b = Builder(3, "basis_change_n3")
    for q in range(3):
        b.ry(0.3 * (q + 1), q)
    b.cx(0, 1).cx(1, 2).rz(0.8, 2).cx(1, 2).cx(0, 1)
    b.h(0).h(2).cx(2, 0).ry(-0.6, 0).cx(2, 0).h(0).h(2)
    return b.measure_all().build()


def fredkin() -> Circuit:
    b = Builder(3, "fredkin_n3").x(0).x(1).h(2)
    b.cswap(0, 1, 2)
    return b.measure_all().build()


def linear_solver() -> Circuit:
    b = Builder(3, "linearsolver_n3").h(0).h(1)
    b.cx(1, 2).ry(0.5, 2).cx(0, 2).ry(-0.5, 2).cx(1, 2).ry(0.5, 2).cx(0, 2)
    b.h(1).cphase(-PI / 2, 0, 1).h(0)
    return b.measure_all().build()


def basis_trotter() -> Circuit:
    b = Builder(4, "basis_trotter_n4")
    for step in range(2):
        for q in range(3):
            b.rzz(0.2 * (step + 1), q, q + 1)
        for q in range(4):
            b.rx(0.15, q)
        b.rzz(0.1, 0, 3)
    return b.measure_all().build()


def hidden_shift() -> Circuit:
    b = Builder(4, "hs4_n4")
    for q in range(4):
        b.h(q)
    b.x(0).x(2).cz(0, 1).cz(2, 3).x(0).x(2)
    for q in range(4):
        b.h(q)
    b.cz(0, 1).cz(2, 3)
    for q in range(4):
        b.h(q)
    return b.measure_all().build()


def bit_flip_code() -> Circuit:
    """Three-qubit repetition code with two syndrome ancillas (qubits 3, 4)."""
    b = Builder(5, "error_correction3_n5").ry(0.7, 0)
    b.cx(0, 1).cx(0, 2).x(1)
    b.cx(0, 3).cx(1, 3).cx(1, 4).cx(2, 4)
    b.ccx(3, 4, 1)
    b.cx(0, 1).cx(0, 2)
    return b.measure_all().build()


def hhl_like(n: int = 7) -> Circuit:
    """Phase estimation register, controlled rotations on an ancilla, uncompute."""
    b = Builder(n, f"hhl_n{n}")
    clock = list(range(1, n - 2))
    anc, sys_q = n - 1, 0
    b.ry(0.9, sys_q)
    for c in clock:
        b.h(c)
    for k, c in enumerate(clock):
        b.cphase(PI / 2 ** k, c, sys_q)
    for k, c in enumerate(clock):
        b.cx(c, anc).ry(0.3 / (k + 1), anc).cx(c, anc)
    for k, c in reversed(list(enumerate(clock))):
        b.cphase(-PI / 2 ** k, c, sys_q)
    for c in clock:
        b.h(c)
    b.cx(anc, n - 2)
    return b.measure_all().build()


def corpus() -> list[Circuit]:
    """Synthetic stand-ins for the standard benchmark families, widths 2 to 16."""
    return [
        dnn(2, seed=2, name="dnn_n2"),
        deutsch(),
        quantum_walk(),
        basis_change(),
        fredkin(),
        linear_solver(),
        basis_trotter(),
        bell_pairs(4),
        hardware_efficient(4, seed=4, name="variational_n4"),
        hardware_efficient(4, layers=3, seed=5, name="vqe_n4"),
        hidden_shift(),
        vqe_ucc(4, seed=4),
        bit_flip_code(),
        qft(5),
        qaoa_ring(6),
        vqe_ucc(6, seed=6),
        hhl_like(7),
        dnn(8, seed=8),
        vqe_ucc(8, seed=8),
        qft(8),
        ripple_adder(4),
        ghz(12),
        qaoa_ring(12),
        random_cx(14, 60, seed=14),
        dnn(16, layers=2, seed=16),
        qft(16),
    ]
