"""Shared device builders for the test suite."""
from __future__ import annotations

import pytest

from tram.device import bundled_device, device_from_dict

# Four-qubit slice of a published calibration snapshot (T1/T2 in us), wired as a path.
SNAPSHOT_QUBITS = [
    # id, t1, t2, readout, 1q error
    (0, 279.6, 353.3, 2.881e-2, 1.536e-4),
    (1, 369.0, 615.8, 7.568e-3, 2.772e-4),
    (2, 299.7, 104.1, 8.545e-3, 1.714e-4),
    (3, 187.9, 218.3, 8.301e-3, 3.920e-4),
]
SNAPSHOT_EDGES = [(0, 1, 1.111e-3), (1, 2, 2.738e-3), (2, 3, 2.516e-3)]

# Controlled-SWAP (control q0, targets q1, q2) written out with the textbook
# Toffoli decomposition; T and T-dagger appear as rz(+-pi/4).
FREDKIN_QASM = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[3];
cx q[2],q[1];
h q[2];
cx q[1],q[2];
rz(-pi/4) q[2];
cx q[0],q[2];
rz(pi/4) q[2];
cx q[1],q[2];
rz(-pi/4) q[2];
cx q[0],q[2];
rz(pi/4) q[1];
rz(pi/4) q[2];
h q[2];
cx q[0],q[1];
rz(pi/4) q[0];
rz(-pi/4) q[1];
cx q[0],q[1];
cx q[2],q[1];
"""


def make_device(num_qubits, edges, *, t1=300.0, t2=None, readout=0.01, sq=1e-4,
                error=0.01, duration=300.0, name="test"):
    """Device dict -> DeviceModel. ``edges`` entries are (a, b) or (a, b, error).

    ``t2`` may be a list; by default it is spread so normalisation is defined.
    """
    if t2 is None:
        t2 = [100.0 + 10.0 * q for q in range(num_qubits)]
    elif not isinstance(t2, (list, tuple)):
        t2 = [t2] * num_qubits
    qubits = [
        {"id": q, "t1_us": t1, "t2_us": t2[q], "readout_error": readout,
         "single_qubit_error": sq}
        for q in range(num_qubits)
    ]
    es = []
    for e in edges:
        a, b = e[0], e[1]
        err = e[2] if len(e) > 2 else error
        es.append({"q0": a, "q1": b, "two_qubit_error": err, "gate_duration_ns": duration})
    return device_from_dict({"name": name, "num_qubits": num_qubits, "qubits": qubits,
                             "edges": es})


def snapshot_device():
    qubits = [
        {"id": q, "t1_us": t1, "t2_us": t2, "readout_error": ro, "single_qubit_error": sq}
        for q, t1, t2, ro, sq in SNAPSHOT_QUBITS
    ]
    edges = [{"q0": a, "q1": b, "two_qubit_error": e, "gate_duration_ns": 68.0}
             for a, b, e in SNAPSHOT_EDGES]
    return device_from_dict({"name": "snapshot", "num_qubits": 4, "qubits": qubits,
                             "edges": edges})


def grid_device(rows, cols, **kw):
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    return make_device(rows * cols, edges, **kw)


@pytest.fixture(scope="session")
def perth():
    return bundled_device("perth")


@pytest.fixture(scope="session")
def guadalupe():
    return bundled_device("guadalupe")


@pytest.fixture(scope="session")
def brooklyn():
    return bundled_device("brooklyn")


@pytest.fixture(scope="session")
def devices(perth, guadalupe, brooklyn):
    return {"perth": perth, "guadalupe": guadalupe, "brooklyn": brooklyn}


# --- acceptance summary -----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
