"""End-to-end compilation: partition -> initial mapping -> routing, plus reports."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from .circuit_ir import Circuit, QasmError, build_dag, depth, load_qasm, reverse_two_qubit_order, to_qasm
from .cqtp import Partition, PartitionError, RewardWeights, select_partition, sweep_grid
from .device import DeviceError, DeviceModel, build_cost_table, dwell_time_for, load_device
from .noise_sim import NoiseSpec, noisy_fidelity
from .thim import Mapping, build_heatmap, global_cost, thim_initial_mapping
from .tswap import RoutedCircuit, RouterParams, is_conformant, route_circuit

log = logging.getLogger(__name__)

ROUTERS = ("tram", "baseline", "both")
BASELINE_LAYOUTS = ("shared", "trivial")
SWEEP_LIMIT = 500
SIMULATE_MAX_WIDTH = 5
AUTO_DEVICE = "auto"


def device_for_width(width: int) -> str:
    """Bundled device a circuit of ``width`` runs on under ``device="auto"``."""
    if width <= 3:
        return "perth"
    if width <= 15:
        return "guadalupe"
    return "brooklyn"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, circuit: str, message: str):
        super().__init__(f"[{stage}] {circuit}: {message}")
        self.stage = stage
        self.circuit = circuit
        self.message = message


class InvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    device: str = "perth"
    circuits: tuple[str, ...] = ()
    omega1: float = 0.5
    omega2: float = 0.5
    phi: float = 1.0
    eta: float = 0.5
    mu: float = 0.5
    delta: float = 1e-3
    decay_reset: int = 0  # SWAPs between decay resets; 0 keeps decay for the whole circuit
    epsilon: float = 1e-8
    refine_budget: int | None = None
    router: str = "both"
    simulate: bool = False
    seed: int = 0  # reserved: every stage is deterministic
    out: str | None = None
    dwell_time: float | None = None
    dwell_mode: str = "layer"
    baseline_layout: str = "shared"
    jobs: int = 1
    allow_large_sweep: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("omega1", "omega2", "mu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("phi", "eta", "delta"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.refine_budget is not None and self.refine_budget < 0:
            raise ConfigError("refine_budget must be >= 0")
        if self.router not in ROUTERS:
            raise ConfigError(f"router must be one of {ROUTERS}, got {self.router!r}")
        if self.dwell_mode not in ("layer", "depth"):
            raise ConfigError(f"dwell_mode must be 'layer' or 'depth', got {self.dwell_mode!r}")
        if self.dwell_time is not None and self.dwell_time < 0:
            raise ConfigError("dwell_time must be >= 0")
        if self.baseline_layout not in BASELINE_LAYOUTS:
            raise ConfigError(f"baseline_layout must be one of {BASELINE_LAYOUTS}")
        if self.decay_reset < 0:
            raise ConfigError("decay_reset must be >= 0")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @property
    def weights(self) -> RewardWeights:
        return RewardWeights(self.omega1, self.omega2)

    @property
    def routers(self) -> tuple[str, ...]:
        return ("tram", "baseline") if self.router == "both" else (self.router,)

    def load_device(self, width: int | None = None) -> DeviceModel:
        name = self.device
        if name == AUTO_DEVICE:
            if width is None:
                raise ConfigError("device 'auto' needs a circuit width")
            name = device_for_width(width)
        return _load_device_cached(name)


_DEVICE_CACHE: dict[str, DeviceModel] = {}


def _load_device_cached(name: str) -> DeviceModel:
    if name not in _DEVICE_CACHE:
        try:
            _DEVICE_CACHE[name] = load_device(name)
        except (OSError, DeviceError) as exc:
            raise ConfigError(f"cannot load device {name!r}: {exc}") from None
    return _DEVICE_CACHE[name]


@dataclass
class CompileResult:
    router: str
    routed: RoutedCircuit
    row: dict


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files("tram") / "data" / "corpus"))


def _dwell(cfg: PipelineConfig, dev: DeviceModel, circuit: Circuit) -> float:
    if cfg.dwell_time is not None:
        return cfg.dwell_time
    return dwell_time_for(dev, cfg.dwell_mode, depth(circuit))


def _percent(before: float, after: float) -> float | None:
    if before == 0:
        return None
    return (before - after) / before * 100.0


def compile_one(cfg: PipelineConfig, circuit: Circuit,
                device: DeviceModel | None = None) -> list[CompileResult]:
    """Compile one circuit with every router ``cfg`` asks for.

    Both routers share the partition. The baseline starts from the same initial
    mapping as TRAM, or from the sorted partition members when
    ``baseline_layout == "trivial"``.
    """
    dev = device or cfg.load_device(circuit.num_qubits)
    name = circuit.name
    if circuit.num_qubits > dev.num_qubits:
        raise StageError("partition", name,
                         f"width {circuit.num_qubits} exceeds device {dev.name!r} "
                         f"({dev.num_qubits} qubits)")
    try:
        part = select_partition(dev, circuit.num_qubits, cfg.weights, cfg.epsilon)
    except (PartitionError, DeviceError, ValueError) as exc:
        raise StageError("partition", name, str(exc)) from exc

    t = _dwell(cfg, dev, circuit)
    # the router never leaves the partition, so distances are measured inside it
    tram_costs = build_cost_table(dev, cfg.eta, t, part.members)
    tg = reverse_two_qubit_order(build_dag(circuit))
    heat = build_heatmap(tg, circuit.num_qubits, cfg.phi) if tg else None

    try:
        m_tram = thim_initial_mapping(circuit, dev, part, cfg.phi, cfg.eta, cfg.refine_budget,
                                      epsilon=cfg.epsilon, costs=tram_costs)
    except ValueError as exc:
        raise StageError("mapping", name, str(exc)) from exc

    results = []
    for router in cfg.routers:
        if router == "tram":
            m0, costs, baseline = m_tram, tram_costs, False
        else:
            if cfg.baseline_layout == "shared":
                m0 = m_tram
            else:
                m0 = Mapping(tuple(sorted(part.members))[: circuit.num_qubits])
            costs, baseline = build_cost_table(dev, 0.0, t, part.members), True
        params = RouterParams(mu=cfg.mu, delta=cfg.delta, decay_reset=cfg.decay_reset)
        try:
            routed = route_circuit(circuit, m0, dev, costs, params, part.members, baseline)
        except Exception as exc:  # surfaced with the stage tag
            raise StageError("routing", name, str(exc)) from exc
        if not is_conformant(routed.circuit, dev):
            raise InvariantError(f"{name}/{router}: routed circuit violates the coupling graph")

        fidelity = None
        if cfg.simulate and circuit.num_qubits <= SIMULATE_MAX_WIDTH:
            try:
                fidelity = noisy_fidelity(routed.circuit, dev, NoiseSpec())
            except ValueError as exc:
                raise StageError("simulate", name, str(exc)) from exc
            if not 0.0 <= fidelity <= 1.0:
                raise InvariantError(f"{name}/{router}: fidelity {fidelity} outside [0, 1]")

        row = {
            "circuit": name,
            "router": router,
            "device": dev.name,
            "num_qubits": circuit.num_qubits,
            "gates_before": circuit.count_ops(),
            "gates_after": routed.circuit.count_ops(),
            "two_qubit_before": circuit.count_two_qubit(),
            "two_qubit_after": routed.two_qubit_gates,
            "depth_before": depth(circuit),
            "depth_after": routed.depth,
            "swaps": routed.swaps_inserted,
            "global_cost": global_cost(heat, tram_costs, m0) if heat is not None else 0.0,
            "partition": list(part.members),
            "initial_layout": list(m0.logical_to_physical),
            "final_layout": list(routed.final_mapping.logical_to_physical),
            "guard_trips": routed.guard_trips,
            "fidelity": fidelity,
        }
        results.append(CompileResult(router, routed, row))
    return results


@dataclass
class RunReport:
    device: str
    rows: list[dict] = field(default_factory=list)
    comparisons: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def aggregates(self) -> dict:
        def mean(key):
            vals = [c[key] for c in self.comparisons if c[key] is not None]
            return sum(vals) / len(vals) if vals else None

        out = {
            "mean_gate_reduction_pct": mean("gate_reduction_pct"),
            "mean_two_qubit_reduction_pct": mean("two_qubit_reduction_pct"),
            "mean_depth_reduction_pct": mean("depth_reduction_pct"),
            "mean_fidelity_delta": mean("fidelity_delta"),
        }
        for router in ("tram", "baseline"):
            rows = [r for r in self.rows if r["router"] == router]
            if rows:
                out[f"{router}_geomean_two_qubit"] = geometric_mean(
                    [r["two_qubit_after"] for r in rows])
                out[f"{router}_geomean_depth"] = geometric_mean([r["depth_after"] for r in rows])
        return out

    @property
    def fidelity_records(self) -> list[dict]:
        return [
            {"circuit": r["circuit"], "router": r["router"], "fidelity": r["fidelity"],
             "ideal_depth": r["depth_before"]}
            for r in self.rows if r["fidelity"] is not None
        ]

    def to_dict(self) -> dict:
        return {
            "device": self.device,
            "config": self.config,
            "rows": self.rows,
            "comparisons": self.comparisons,
            "aggregates": self.aggregates,
            "fidelity": self.fidelity_records,
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        head = ["circuit", "router", "n", "2q_before", "2q_after", "depth_before",
                "depth_after", "swaps", "fidelity"]
        lines = [head]
        for r in self.rows:
            fid = "-" if r["fidelity"] is None else f"{r['fidelity']:.4f}"
            lines.append([r["circuit"], r["router"], str(r["num_qubits"]),
                          str(r["two_qubit_before"]), str(r["two_qubit_after"]),
                          str(r["depth_before"]), str(r["depth_after"]), str(r["swaps"]), fid])
        widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
        text = [
            "  ".join(cell.ljust(w) if i < 2 else cell.rjust(w)
                      for i, (cell, w) in enumerate(zip(row, widths))).rstrip()
            for row in lines
        ]
        if self.comparisons:
            text.append("")
            text.append("improvement over baseline (%):")
            for c in self.comparisons:
                parts = [f"{c['circuit']}:"]
                for key, label in (("two_qubit_reduction_pct", "2q"),
                                   ("depth_reduction_pct", "depth")):
                    v = c[key]
                    parts.append(f"{label} {'-' if v is None else f'{v:+.2f}'}")
                if c["fidelity_delta"] is not None:
                    parts.append(f"fidelity {c['fidelity_delta']:+.4f}")
                text.append("  " + "  ".join(parts))
        agg = self.aggregates
        text.append("")
        for k in sorted(agg):
            v = agg[k]
            text.append(f"{k}: {'-' if v is None else f'{v:.4f}'}")
        for f in self.failures:
            text.append(f"FAILED {f['circuit']} [{f['stage']}]: {f['message']}")
        return "\n".join(text) + "\n"


def geometric_mean(values) -> float:
    vals = list(values)
    if not vals:
        raise ValueError("geometric mean of an empty list")
    # +1 keeps zero counts (e.g. a circuit with no two-qubit gates) well defined
    return math.exp(sum(math.log(v + 1) for v in vals) / len(vals)) - 1


def compare_rows(rows: list[dict]) -> list[dict]:
    """Per-circuit improvement of tram over baseline, (baseline - tram) / baseline * 100."""
    by = {(r["circuit"], r["router"]): r for r in rows}
    out = []
    for name in sorted({r["circuit"] for r in rows}):
        t, b = by.get((name, "tram")), by.get((name, "baseline"))
        if t is None or b is None:
            continue
        fd = None
        if t["fidelity"] is not None and b["fidelity"] is not None:
            fd = t["fidelity"] - b["fidelity"]
        out.append({
            "circuit": name,
            "gate_reduction_pct": _percent(b["gates_after"], t["gates_after"]),
            "two_qubit_reduction_pct": _percent(b["two_qubit_after"], t["two_qubit_after"]),
            "depth_reduction_pct": _percent(b["depth_after"], t["depth_after"]),
            "fidelity_delta": fd,
        })
    return out


def _config_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    # paths and parallelism do not affect results
    for k in ("circuits", "out", "jobs", "allow_large_sweep"):
        d.pop(k)
    return d


def _compile_task(args):
    cfg, path = args
    name = Path(path).stem
    try:
        circuit = load_qasm(path)
    except (OSError, QasmError) as exc:
        return name, None, {"circuit": name, "stage": "load", "message": str(exc)}
    try:
        results = compile_one(cfg, circuit)
    except StageError as exc:
        return name, None, {"circuit": name, "stage": exc.stage, "message": exc.message}
    return name, [(r.router, r.row, to_qasm(r.routed.circuit)) for r in results], None


def compile_paths(cfg: PipelineConfig, paths) -> RunReport:
    """Compile every file in ``paths``; per-circuit failures are recorded, not raised."""
    if cfg.device != AUTO_DEVICE:
        cfg.load_device()  # fail early on a bad device
    paths = sorted((str(p) for p in paths), key=lambda p: (Path(p).stem, p))
    tasks = [(cfg, p) for p in paths]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_compile_task, tasks))
    else:
        outcomes = [_compile_task(t) for t in tasks]

    report = RunReport(cfg.device if cfg.device == AUTO_DEVICE else cfg.load_device().name,
                       config=_config_dict(cfg))
    artifacts = []
    for name, results, failure in outcomes:
        if failure is not None:
            log.error("%s failed at %s: %s", name, failure["stage"], failure["message"])
            report.failures.append(failure)
            continue
        for router, row, qasm in results:
            report.rows.append(row)
            artifacts.append((f"{name}.{router}.qasm", qasm, row))
    report.comparisons = compare_rows(report.rows)
    if cfg.out:
        write_outputs(cfg, report, artifacts, Path(cfg.out))
    return report


def write_outputs(cfg: PipelineConfig, report: RunReport, artifacts, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for fname, qasm, row in artifacts:
        (out / fname).write_text(qasm)
        row["artifact"] = fname
        reloaded = load_qasm(out / fname)
        if not is_conformant(reloaded, cfg.load_device(row["num_qubits"])):
            raise InvariantError(f"{fname}: re-loaded artifact violates the coupling graph")
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.to_table())


def run_corpus(cfg: PipelineConfig, corpus_dir=None) -> RunReport:
    d = Path(corpus_dir) if corpus_dir is not None else bundled_corpus_dir()
    paths = sorted(d.glob("*.qasm"))
    if not paths:
        raise ConfigError(f"no .qasm files in {d}")
    return compile_paths(cfg, paths)


# --- sweeps -------------------------------------------------------------------

def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` -> inclusive list of values."""
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ConfigError(f"grid must look like start:stop:step, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"invalid grid {spec!r}")
    return sweep_grid(start, stop, step)


def _partition_of(dev: DeviceModel, width: int, w: RewardWeights, eps: float) -> Partition:
    return select_partition(dev, width, w, eps)


def sweep_weights(cfg: PipelineConfig, grid, paths=None) -> list[dict]:
    """One corpus run per (omega1, omega2) on ``grid`` (values or a start:stop:step spec)."""
    values = parse_grid(grid) if isinstance(grid, str) else list(grid)
    points = [(a, b) for a in values for b in values]
    if len(points) > SWEEP_LIMIT and not cfg.allow_large_sweep:
        raise ConfigError(f"{len(points)} grid points exceed {SWEEP_LIMIT}; "
                          "pass --allow-large-sweep to run anyway")
    paths = list(paths) if paths is not None else sorted(bundled_corpus_dir().glob("*.qasm"))
    rows = []
    for a, b in points:
        point_cfg = replace(cfg, omega1=a, omega2=b, out=None)
        report = compile_paths(point_cfg, paths)
        partitions = {}
        for r in report.rows:
            partitions.setdefault(r["circuit"], r["partition"])
        rows.append({"omega1": a, "omega2": b, "partitions": partitions,
                     "aggregates": report.aggregates, "failures": len(report.failures)})
    return rows


def sweep_epsilon(cfg: PipelineConfig, epsilons=(1e-10, 1e-8, 1e-6), widths=None) -> list[dict]:
    """Partitions for each epsilon at every width (default: 1..device size)."""
    if cfg.device == AUTO_DEVICE:
        raise ConfigError("the epsilon sweep needs a concrete device")
    dev = cfg.load_device()
    widths = list(widths) if widths is not None else list(range(1, dev.num_qubits + 1))
    return [
        {"epsilon": eps,
         "partitions": {str(n): list(_partition_of(dev, n, cfg.weights, eps).members)
                        for n in widths}}
        for eps in epsilons
    ]
