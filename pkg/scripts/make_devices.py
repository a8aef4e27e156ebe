"""Regenerate the bundled device fixtures (synthetic calibration, IBM topologies)."""
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "tram" / "data" / "devices"

PERTH_EDGES = [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]
GUADALUPE_EDGES = [
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7),
    (7, 10), (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14),
]


def brooklyn_edges():
    rows = [range(0, 10), range(13, 24), range(27, 38), range(41, 52), range(55, 65)]
    edges = []
    for r in rows:
        r = list(r)
        edges += list(zip(r[:-1], r[1:]))
    bridges = [
        (0, 10, 13), (4, 11, 17), (8, 12, 21),
        (15, 24, 29), (19, 25, 33), (23, 26, 37),
        (27, 38, 41), (31, 39, 45), (35, 40, 49),
        (43, 52, 56), (47, 53, 60), (51, 54, 64),
    ]
    for top, mid, bottom in bridges:
        edges += [(top, mid), (mid, bottom)]
    return sorted((min(a, b), max(a, b)) for a, b in edges)


def synthetic(name, n, edges, seed):
    rng = np.random.default_rng(seed)
    qubits = []
    for q in range(n):
        t1 = float(rng.uniform(120, 400))
        t2 = float(min(rng.uniform(60, 620), 2 * t1 * 0.98))
        qubits.append({
            "id": q,
            "t1_us": round(t1, 1),
            "t2_us": round(t2, 1),
            "readout_error": float(f"{rng.uniform(5e-3, 3e-2):.4e}"),
            "single_qubit_error": float(f"{rng.uniform(1.5e-4, 5e-4):.4e}"),
        })
    es = []
    for a, b in edges:
        es.append({
            "q0": a,
            "q1": b,
            "two_qubit_error": float(f"{rng.uniform(1e-3, 1.2e-2):.4e}"),
            "gate_duration_ns": float(round(rng.uniform(300, 560), 1)),
        })
    return {"name": name, "num_qubits": n, "qubits": qubits, "edges": es}


def perth():
    # Q3..Q6 carry long, homogeneous T2 and Q0..Q3 the cleanest couplers.
    t1 = [279.6, 369.0, 299.7, 330.4, 301.2, 352.8, 310.5]
    t2 = [353.3, 215.8, 104.1, 522.3, 541.0, 560.2, 533.7]
    ro = [2.881e-2, 7.568e-3, 8.545e-3, 8.301e-3, 1.21e-2, 9.8e-3, 1.35e-2]
    sq = [1.536e-4, 2.772e-4, 1.714e-4, 3.920e-4, 2.41e-4, 2.05e-4, 3.12e-4]
    err = {(0, 1): 1.111e-3, (1, 2): 2.738e-3, (1, 3): 2.516e-3,
           (3, 5): 7.9e-3, (4, 5): 6.4e-3, (5, 6): 8.8e-3}
    dur = {(0, 1): 341.3, (1, 2): 305.8, (1, 3): 412.4,
           (3, 5): 455.1, (4, 5): 384.0, (5, 6): 519.6}
    return {
        "name": "perth",
        "num_qubits": 7,
        "qubits": [
            {"id": q, "t1_us": t1[q], "t2_us": t2[q], "readout_error": ro[q],
             "single_qubit_error": sq[q]}
            for q in range(7)
        ],
        "edges": [
            {"q0": a, "q1": b, "two_qubit_error": err[(a, b)], "gate_duration_ns": dur[(a, b)]}
            for a, b in PERTH_EDGES
        ],
    }


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    fixtures = {
        "perth": perth(),
        "guadalupe": synthetic("guadalupe", 16, GUADALUPE_EDGES, seed=16),
        "brooklyn": synthetic("brooklyn", 65, brooklyn_edges(), seed=65),
    }
    for name, data in fixtures.items():
        (OUT / f"{name}.json").write_text(json.dumps(data, indent=1) + "\n")
        print(name, data["num_qubits"], len(data["edges"]))
