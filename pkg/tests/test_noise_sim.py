import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_device
from tram.circuit_ir import Circuit, Gate, GateKind, load_qasm
from tram.device import CalibrationRecord
from tram.generators import random_circuit
from tram.noise_sim import (
    DENSITY_CAP,
    DensityMatrix,
    InvalidStateError,
    KrausChannel,
    NoiseSpec,
    SimulationError,
    X,
    Z,
    amplitude_damping,
    apply_channel,
    apply_gate,
    channel_params_from_calibration,
    completeness_error,
    dephasing,
    depolarizing,
    noisy_fidelity,
    simulate_noisy,
    simulate_statevector,
    uhlmann_fidelity,
    zero_state,
)
from tram.pipeline import PipelineConfig, bundled_corpus_dir, compile_one

I2 = np.eye(2)
PLUS = np.array([1, 1]) / math.sqrt(2)


def random_rho(rng, n):
    d = 2 ** n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = g @ g.conj().T
    return DensityMatrix(r / np.trace(r))


def random_psi(rng, n):
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return v / np.linalg.norm(v)


def compose_thermal(rec, t, rho):
    p = channel_params_from_calibration(rec, t)
    rho = apply_channel(rho, amplitude_damping(p["lambda"]), 0)
    return apply_channel(rho, dephasing(p["gamma"]), 0)


# --- channels -------------------------------------------------------------------------

def test_depolarizing_examples():
    assert len(depolarizing(0.0)) == 1
    assert completeness_error(depolarizing(0.3)) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(10):
        out = apply_channel(random_rho(rng, 1), depolarizing(0.75), 0)
        assert np.max(np.abs(out.rho - I2 / 2)) < 1e-12


def test_dephasing_examples():
    plus = DensityMatrix.from_statevector(PLUS)
    out = apply_channel(plus, dephasing(0.5), 0)
    assert out.rho[0, 1] == 0 and out.rho[1, 0] == 0
    assert len(dephasing(0.0)) == 1
    out = apply_channel(plus, dephasing(0.1), 0)
    assert abs(out.rho[0, 1] - 0.4) < 1e-15


def test_amplitude_damping_examples():
    one = DensityMatrix(np.diag([0, 1]))
    assert np.allclose(apply_channel(one, amplitude_damping(1.0), 0).rho, np.diag([1, 0]),
                       atol=1e-15)
    assert len(amplitude_damping(0.0)) == 1
    assert np.allclose(apply_channel(one, amplitude_damping(0.5), 0).rho, np.diag([0.5, 0.5]),
                       atol=1e-15)


@pytest.mark.parametrize("factory", [depolarizing, dephasing, amplitude_damping])
@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_channel_probability_range(factory, bad):
    with pytest.raises(ValueError):
        factory(bad)


def test_incomplete_channel_is_rejected():
    with pytest.raises(ValueError):
        KrausChannel((0.5 * I2,))


def test_completeness_over_random_draws():
    rng = np.random.default_rng(7)
    for p in rng.random(1000):
        for ch in (depolarizing(p), dephasing(p), amplitude_damping(p)):
            assert completeness_error(ch) < 1e-12


# --- calibration-derived parameters -------------------------------------------------

def test_zero_duration_gives_no_noise():
    p = channel_params_from_calibration(CalibrationRecord(0, 279.6, 353.3, 0, 0), 0.0)
    assert p == {"gamma": 0.0, "lambda": 0.0}


def test_snapshot_qubit_coherence_decay():
    rec = CalibrationRecord(0, 279.6, 353.3, 0, 0)
    out = compose_thermal(rec, 100.0, DensityMatrix.from_statevector(PLUS))
    factor = abs(out.rho[0, 1]) / 0.5
    assert abs(factor - math.exp(-100 / 353.3)) < 1e-9
    assert round(factor, 4) == 0.7535


def test_pure_damping_limit():
    rec = CalibrationRecord(0, 100.0, 200.0, 0, 0)
    p = channel_params_from_calibration(rec, 50.0)
    assert p["gamma"] == 0.0
    assert p["lambda"] == pytest.approx(1 - math.exp(-0.5))


def test_negative_duration_is_rejected():
    with pytest.raises(ValueError):
        channel_params_from_calibration(CalibrationRecord(0, 1.0, 1.0, 0, 0), -1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 1000.0), st.floats(0.05, 1.0), st.floats(0.0, 2000.0))
def test_coherence_decay_law(t1, ratio, t):
    t2 = 2 * t1 * ratio
    rec = CalibrationRecord(0, t1, t2, 0, 0)
    out = compose_thermal(rec, t, DensityMatrix.from_statevector(PLUS))
    assert abs(abs(out.rho[0, 1]) / 0.5 - math.exp(-t / t2)) < 1e-9


# --- applying channels and gates -----------------------------------------------------

def test_identity_channel_leaves_state():
    rng = np.random.default_rng(1)
    rho = random_rho(rng, 2)
    assert np.array_equal(apply_channel(rho, depolarizing(0.0), 1).rho, rho.rho)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_channels_preserve_trace_and_hermiticity(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_rho(rng, n)
    target = int(rng.integers(n))
    factory = [depolarizing, dephasing, amplitude_damping][int(rng.integers(3))]
    out = apply_channel(rho, factory(float(rng.random())), target)
    assert abs(out.trace() - 1) < 1e-12
    assert np.max(np.abs(out.rho - out.rho.conj().T)) < 1e-12
    out.validate(1e-10)


def test_dephasing_bell_state_cross_blocks():
    bell = DensityMatrix.from_statevector(np.array([1, 0, 0, 1]) / math.sqrt(2))
    g = 0.2
    out = apply_channel(bell, dephasing(g), 0)
    # rows/cols with qubit 0 = 0 are {0, 1}, with qubit 0 = 1 are {2, 3}
    assert abs(out.rho[0, 3] - 0.5 * (1 - 2 * g)) < 1e-15
    assert abs(out.rho[3, 0] - 0.5 * (1 - 2 * g)) < 1e-15
    assert out.rho[0, 0] == pytest.approx(0.5) and out.rho[3, 3] == pytest.approx(0.5)


def test_apply_channel_dimension_checks():
    rho = DensityMatrix.zero(2)
    with pytest.raises(SimulationError):
        apply_channel(rho, depolarizing(0.1), 2)
    with pytest.raises(SimulationError):
        apply_channel(rho, KrausChannel((np.eye(4),)), 0)


def test_gate_truth_tables():
    one = apply_gate(zero_state(1), Gate(GateKind.X, (0,)))
    assert np.allclose(one, [0, 1])
    ten = np.zeros(4, dtype=complex)
    ten[0b10] = 1
    out = apply_gate(ten, Gate(GateKind.CX, (0, 1)))
    assert np.allclose(out, np.eye(4)[0b11])


def test_hadamard_is_an_involution():
    rng = np.random.default_rng(2)
    psi = random_psi(rng, 3)
    h = Gate(GateKind.H, (1,))
    assert np.max(np.abs(apply_gate(apply_gate(psi, h), h) - psi)) < 1e-12


def test_density_and_statevector_gate_agree():
    rng = np.random.default_rng(3)
    psi = random_psi(rng, 3)
    g = Gate(GateKind.RY, (2,), (0.7,))
    rho = apply_gate(DensityMatrix.from_statevector(psi), g)
    phi = apply_gate(psi, g)
    assert np.max(np.abs(rho.rho - np.outer(phi, phi.conj()))) < 1e-12


def test_gate_outside_state_is_rejected():
    with pytest.raises(SimulationError):
        apply_gate(zero_state(2), Gate(GateKind.CX, (0, 2)))


# --- fidelity -----------------------------------------------------------------------

def test_uhlmann_examples():
    rng = np.random.default_rng(4)
    rho = random_rho(rng, 2)
    assert abs(uhlmann_fidelity(rho, rho) - 1) < 1e-10
    assert uhlmann_fidelity(np.array([1, 0]), np.array([0, 1])) == 0.0
    assert abs(uhlmann_fidelity(np.array([1, 0]), PLUS) - 1 / math.sqrt(2)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_uhlmann_symmetric_and_bounded(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_rho(rng, n), random_rho(rng, n)
    f = uhlmann_fidelity(a, b)
    assert 0 <= f <= 1
    assert abs(f - uhlmann_fidelity(b, a)) < 1e-10


def test_uhlmann_rejects_invalid_states():
    with pytest.raises(InvalidStateError):
        uhlmann_fidelity(np.diag([0.7, 0.7]), np.diag([1.0, 0.0]))
    with pytest.raises(InvalidStateError):
        uhlmann_fidelity(np.eye(2) / 2, np.eye(4) / 4)


# --- circuit simulation -------------------------------------------------------------

def _line(n, error=0.02):
    return make_device(n, [(q, q + 1) for q in range(n - 1)], error=error)


def test_noiseless_run_is_the_ideal_state():
    dev = _line(3)
    c = Circuit(3, (Gate(GateKind.H, (0,)), Gate(GateKind.CX, (0, 1)), Gate(GateKind.CX, (1, 2))))
    rho = simulate_noisy(c, dev, NoiseSpec.noiseless())
    psi, _ = simulate_statevector(c)
    assert np.max(np.abs(rho.rho - np.outer(psi, psi.conj()))) < 1e-12


def test_cx_with_full_depolarizing_matches_kraus_sum():
    dev = _line(2, error=0.75)
    c = Circuit(2, (Gate(GateKind.H, (0,)), Gate(GateKind.CX, (0, 1))))
    spec = NoiseSpec(depolarizing=True, thermal=False, single_qubit_duration_ns=0.0)
    got = simulate_noisy(c, dev, spec).rho
    # oracle: H (with its own 1q depolarizing), then CX, then the 16 two-qubit products
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1
    hk = np.kron(h, I2)
    rho = hk @ rho @ hk.conj().T
    p1 = dev.qubits[0].single_qubit_error
    ks1 = depolarizing(p1).operators
    rho = sum(np.kron(k, I2) @ rho @ np.kron(k, I2).conj().T for k in ks1)
    cx = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    rho = cx @ rho @ cx.T
    ks = depolarizing(0.75).operators
    expected = sum(np.kron(a, b) @ rho @ np.kron(a, b).conj().T for a in ks for b in ks)
    assert np.max(np.abs(got - expected)) < 1e-9


def test_full_depolarizing_on_both_operands_is_maximally_mixed():
    dev = _line(2, error=0.75)
    c = Circuit(2, (Gate(GateKind.CX, (0, 1)),))
    rho = simulate_noisy(c, dev, NoiseSpec(thermal=False))
    assert np.max(np.abs(rho.rho - np.eye(4) / 4)) < 1e-12


def test_statevector_and_density_modes_agree():
    rng = np.random.default_rng(11)
    for _ in range(20):
        c = random_circuit(4, 30, rng)
        dev = _line(4)
        qs = list(range(4))
        rho = simulate_noisy(c, dev, NoiseSpec.noiseless(), qs)
        psi, _ = simulate_statevector(c, qs)
        assert uhlmann_fidelity(rho, psi) ** 2 >= 1 - 1e-10


def test_corpus_fidelity_in_range(perth):
    cfg = PipelineConfig(device="perth", router="tram")
    for path in sorted(Path(bundled_corpus_dir()).glob("*.qasm")):
        c = load_qasm(path)
        if c.num_qubits > 5:
            continue
        routed = compile_one(cfg, c)[0].routed.circuit
        assert 0.0 <= noisy_fidelity(routed, perth) <= 1.0


def test_uncoupled_gate_is_rejected(perth):
    with pytest.raises(SimulationError):
        simulate_noisy(Circuit(7, (Gate(GateKind.CX, (0, 6)),)), perth, qubits=[0, 6])


def test_density_cap():
    dev = _line(DENSITY_CAP + 1)
    c = Circuit(DENSITY_CAP + 1, tuple(Gate(GateKind.H, (q,)) for q in range(DENSITY_CAP + 1)))
    with pytest.raises(SimulationError):
        simulate_noisy(c, dev)


def test_noisy_fidelity_drops_below_one():
    dev = _line(3)
    c = Circuit(3, (Gate(GateKind.H, (0,)), Gate(GateKind.CX, (0, 1)), Gate(GateKind.CX, (1, 2))))
    f = noisy_fidelity(c, dev)
    assert 0.9 < f < 1.0


def test_density_matrix_validation():
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.eye(3) / 3)
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2])).validate()
