"""Abstract gates and the gate sequences of the two Fourier-transform protocols."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ONE_QUBIT = {"A", "Z", "N"}
TWO_QUBIT = {"B", "CN", "R", "Rdag", "S", "G"}
KINDS = ONE_QUBIT | TWO_QUBIT | {"T"}


@dataclass(frozen=True)
class GateSpec:
    """kind in KINDS; qubits are (j,) or (i, j); phi only for B and G.

    For CN, R and Rdag the first qubit is the control.  B and G default to
    the Fourier phase pi / 2**|j - i|.
    """

    kind: str
    qubits: tuple = ()
    phi: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        q = tuple(int(x) for x in self.qubits)
        object.__setattr__(self, "qubits", q)
        want = 1 if self.kind in ONE_QUBIT else 2 if self.kind in TWO_QUBIT else 0
        if len(q) != want:
            raise ValueError(f"{self.kind} needs {want} qubit indices, got {q}")
        if want == 2 and q[0] == q[1]:
            raise ValueError(f"{self.kind} needs two distinct qubits, got {q}")
        if self.kind in ("B", "G") and self.phi is None:
            object.__setattr__(self, "phi", float(np.pi / 2 ** abs(q[1] - q[0])))

    def validate(self, n: int):
        for x in self.qubits:
            if not 0 <= x < n:
                raise ValueError(f"{self} has qubit {x} outside 0..{n - 1}")

    def label(self) -> str:
        if self.kind == "T":
            return "T"
        return self.kind + "_" + "".join(map(str, self.qubits))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "qubits": list(self.qubits)}
        if self.phi is not None:
            d["phi"] = self.phi
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GateSpec":
        return cls(d["kind"], tuple(d.get("qubits", ())), d.get("phi"))


ALGORITHMS = ("qft", "iqft")


def algorithm_gates(algo: str, n: int) -> list:
    """Gate list in time order (first applied first).

    QFT:  A_{n-1}, then for j = n-2..0: B_{j,n-1} .. B_{j,j+1}, A_j; then T.
    IQFT: A_{n-1}, then for j = n-2..0: G_{j,n-1} .. G_{j,j+1},
          R_{j,n-1} .. R_{j,j+1}, A_j; then T.
    """
    algo = algo.lower()
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    seq = [GateSpec("A", (n - 1,))]
    for j in range(n - 2, -1, -1):
        targets = range(n - 1, j, -1)
        if algo == "qft":
            seq += [GateSpec("B", (j, m)) for m in targets]
        else:
            seq += [GateSpec("G", (j, m)) for m in targets]
            seq += [GateSpec("R", (j, m)) for m in targets]
        seq.append(GateSpec("A", (j,)))
    seq.append(GateSpec("T"))
    return seq


def gate_count(algo: str, n: int) -> int:
    return n * (n + 1) // 2 + 1 if algo.lower() == "qft" else n * n + 1
