"""Regenerate the bundled benchmark corpus (deterministic)."""
from pathlib import Path

from tram.circuit_ir import to_qasm
from tram.generators import corpus

OUT = Path(__file__).resolve().parents[1] / "src" / "tram" / "data" / "corpus"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for c in corpus():
        (OUT / f"{c.name}.qasm").write_text(to_qasm(c))
        print(f"{c.name}: {c.num_qubits} qubits, {len(c)} ops, {c.count_two_qubit()} 2q")


if __name__ == "__main__":
    main()
