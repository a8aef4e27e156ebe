"""Noise-aware qubit mapping: partition, place, route, simulate."""

from .circuit_ir import Circuit, Gate, GateKind, build_dag, depth, load_qasm, parse_qasm, to_qasm
from .cqtp import RewardWeights, build_hierarchy, select_partition
from .device import DeviceModel, build_cost_table, bundled_device, err_distance, load_device
from .pipeline import PipelineConfig, compile_one, run_corpus
from .thim import Mapping, thim_initial_mapping
from .tswap import RouterParams, route, route_baseline, route_circuit

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Gate", "GateKind", "build_dag", "depth", "load_qasm", "parse_qasm", "to_qasm",
    "RewardWeights", "build_hierarchy", "select_partition",
    "DeviceModel", "build_cost_table", "bundled_device", "err_distance", "load_device",
    "PipelineConfig", "compile_one", "run_corpus",
    "Mapping", "thim_initial_mapping",
    "RouterParams", "route", "route_baseline", "route_circuit",
]
