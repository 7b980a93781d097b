"""Lowering of Pauli-rotation programs to the trapped-ion native gate set.

Gates and their matrices::

    VirtualZ(phi) = exp(-i phi/2 Z)
    GPi(phi)      = [[0, e^{-i phi}], [e^{i phi}, 0]]
    GPi2(phi)     = [[1, -i e^{-i phi}], [-i e^{i phi}, 1]] / sqrt(2)
    ZZ(phi)       = exp(-i phi/2 Z0 Z1)

A k-body rotation ``exp(-i theta Z..Y..Z)`` is peeled one Z at a time: with
``U = ZZ(pi/2)`` on (a, j), ``U^dag (Z_a Y_j) U = X_j`` and
``U^dag (Z_a X_j) U = -Y_j``.  After ``k - 1`` conjugations only a single-qubit
rotation on ``j`` is left, so the rotation costs ``2(k - 1)`` ZZ gates.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .cdsynth import CdProgram, PauliRotation
from .errors import InvalidInputError

KINDS = ("virtualz", "gpi", "gpi2", "zz")
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class NativeGate:
    kind: str
    targets: tuple[int, ...]
    angle: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown native gate {self.kind!r}")
        want = 2 if self.kind == "zz" else 1
        if len(self.targets) != want or len(set(self.targets)) != want:
            raise InvalidInputError(f"{self.kind} needs {want} distinct targets, got {self.targets}")

    def to_dict(self) -> dict:
        return {"gate": self.kind, "targets": list(self.targets), "angle": self.angle}

    @classmethod
    def from_dict(cls, d: dict) -> "NativeGate":
        return cls(d["gate"], tuple(d["targets"]), float(d["angle"]))


@dataclass
class NativeCircuit:
    num_qubits: int
    gates: list[NativeGate] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        c = Counter(g.kind for g in self.gates)
        return {k: c.get(k, 0) for k in KINDS}

    @property
    def zz_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "zz")

    @property
    def two_qubit_depth(self) -> int:
        """Depth of the ZZ layer structure, with single-qubit gates treated as free."""
        level = [0] * self.num_qubits
        for g in self.gates:
            if g.kind == "zz":
                a, b = g.targets
                level[a] = level[b] = max(level[a], level[b]) + 1
        return max(level, default=0)

    def to_list(self) -> list[dict]:
        return [g.to_dict() for g in self.gates]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, num_qubits: int, gates: Iterable[dict]) -> "NativeCircuit":
        return cls(num_qubits, [NativeGate.from_dict(g) for g in gates])


def native_matrix(g: NativeGate) -> np.ndarray:
    phi = g.angle
    if g.kind == "virtualz":
        return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])
    if g.kind == "gpi":
        return np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])
    if g.kind == "gpi2":
        return np.array([[1, -1j * np.exp(-1j * phi)], [-1j * np.exp(1j * phi), 1]]) / math.sqrt(2)
    return np.diag(np.exp(-0.5j * phi * np.array([1, -1, -1, 1])))


def _embed(m: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Dense ``2^n`` operator of a gate acting on ``targets`` (qubit 0 most significant)."""
    k = len(targets)
    full = m.reshape((2,) * (2 * k))
    eye = np.eye(1 << n, dtype=np.complex128).reshape((2,) * (2 * n))
    # Contract gate output legs with the row legs of the identity at the target axes.
    out = np.tensordot(full, eye, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(1 << n, 1 << n)


def circuit_unitary(circ: NativeCircuit) -> np.ndarray:
    """Dense unitary of a native circuit (gates applied in list order)."""
    n = circ.num_qubits
    u = np.eye(1 << n, dtype=np.complex128)
    for g in circ.gates:
        u = _embed(native_matrix(g), g.targets, n) @ u
    return u


def _rx(q: int, phi: float) -> list[NativeGate]:
    return [NativeGate("gpi2", (q,), -HALF_PI), NativeGate("virtualz", (q,), phi), NativeGate("gpi2", (q,), HALF_PI)]


def _ry(q: int, phi: float) -> list[NativeGate]:
    return [NativeGate("gpi2", (q,), 0.0), NativeGate("virtualz", (q,), phi), NativeGate("gpi2", (q,), math.pi)]


def lower_rotation(rot: PauliRotation) -> list[NativeGate]:
    """Native gates implementing ``exp(-i rot.angle P)`` exactly."""
    theta = rot.angle
    zs = list(rot.z)
    xs = list(rot.x)
    if rot.y is not None:
        center, letter = rot.y, "y"
    elif xs:
        center, letter = xs.pop(), "x"
    elif len(zs) == 1:
        return [NativeGate("virtualz", (zs[0],), 2.0 * theta)]
    elif len(zs) == 2:
        return [NativeGate("zz", (zs[0], zs[1]), 2.0 * theta)]
    elif zs:
        # Z = R_y(-pi/2) X R_y(pi/2) turns the last Z into an X ladder center.
        center = zs.pop()
        inner = lower_rotation(PauliRotation(tuple(zs), None, theta, (center,)))
        return [NativeGate("gpi2", (center,), HALF_PI), *inner, NativeGate("gpi2", (center,), -HALF_PI)]
    else:
        return []
    # Non-central X factors become Z via X = R_y(pi/2) Z R_y(-pi/2).
    pre = [NativeGate("gpi2", (q,), -HALF_PI) for q in xs]
    post = [NativeGate("gpi2", (q,), HALF_PI) for q in xs]
    controls = zs + xs
    sign = 1.0
    before, after = [], []
    for a in controls:
        # ZZ(pi/2) maps Z_a Y_j -> X_j and Z_a X_j -> -Y_j under conjugation.
        before.append(NativeGate("zz", (a, center), -HALF_PI))
        after.append(NativeGate("zz", (a, center), HALF_PI))
        if letter == "x":
            sign = -sign
        letter = "x" if letter == "y" else "y"
    core = (_rx if letter == "x" else _ry)(center, 2.0 * sign * theta)
    return pre + before + core + after[::-1] + post


def _fuse(gates: list[NativeGate]) -> list[NativeGate]:
    out: list[NativeGate] = []
    for g in gates:
        if g.kind == "virtualz" and out and out[-1].kind == "virtualz" and out[-1].targets == g.targets:
            g = NativeGate("virtualz", g.targets, out.pop().angle + g.angle)
        out.append(g)
    return [g for g in out if not (g.kind == "virtualz" and g.angle == 0.0)]


def lower(program: CdProgram) -> NativeCircuit:
    gates: list[NativeGate] = []
    for rot in program.rotations:
        gates.extend(lower_rotation(rot))
    return NativeCircuit(program.num_qubits, _fuse(gates))


def rotation_zz_cost(rot: PauliRotation) -> int:
    k = rot.weight
    if rot.y is None and not rot.x and k == 2:
        return 1
    return 2 * (k - 1) if k >= 2 else 0


def zz_count(program: CdProgram) -> int:
    """ZZ gates ``lower(program)`` would emit, without building the circuit."""
    return sum(rotation_zz_cost(r) for r in program.rotations)


def cost_report(circuits: Iterable[NativeCircuit | int]) -> tuple[int, int]:
    """``(min, max)`` ZZ counts over circuits (or precomputed counts)."""
    counts = [c if isinstance(c, (int, np.integer)) else c.zz_count for c in circuits]
    if not counts:
        raise InvalidInputError("cost_report needs at least one circuit")
    return int(min(counts)), int(max(counts))


def pauli_rotation_matrix(rot: PauliRotation, n: int) -> np.ndarray:
    """Dense ``exp(-i angle P)`` for testing lowerings."""
    mats = {"x": np.array([[0, 1], [1, 0]]), "y": np.array([[0, -1j], [1j, 0]]), "z": np.diag([1, -1])}
    letters = ["i"] * n
    for q in rot.z:
        letters[q] = "z"
    for q in rot.x:
        letters[q] = "x"
    if rot.y is not None:
        letters[rot.y] = "y"
    p = reduce(np.kron, [mats.get(c, np.eye(2)) for c in letters]).astype(np.complex128)
    return math.cos(rot.angle) * np.eye(1 << n) - 1j * math.sin(rot.angle) * p
