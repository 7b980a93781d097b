"""Noiseless statevector simulation of product-state preparation and Pauli rotations.

Amplitude index ``i`` encodes the computational basis state big-endian: qubit 0
is the most significant bit, matching the leftmost character of a bitstring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .bias import BiasState
from .cdsynth import CdProgram, PauliRotation
from .errors import CapacityError, DimensionError, InvalidInputError, SingularMixerError
from .hubo import HuboHamiltonian, as_bits, index_to_bitstring

DEFAULT_MAX_QUBITS = 26
_BLOCK = 1 << 16


class StateVector:
    """``2^N`` complex amplitudes, mutated in place by gate application."""

    def __init__(self, amplitudes, max_qubits: int = DEFAULT_MAX_QUBITS):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise DimensionError("amplitude count must be a power of two")
        if n > max_qubits:
            raise CapacityError(f"{n} qubits exceeds the statevector cap of {max_qubits}")
        self.amplitudes = amps
        self.num_qubits = n
        self.max_qubits = max_qubits

    @classmethod
    def zeros(cls, num_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> "StateVector":
        if num_qubits > max_qubits:
            raise CapacityError(f"{num_qubits} qubits exceeds the statevector cap of {max_qubits}")
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, max_qubits)

    @classmethod
    def product(cls, qubit_states: Iterable, max_qubits: int = DEFAULT_MAX_QUBITS) -> "StateVector":
        """Tensor product of single-qubit 2-vectors, qubit 0 first."""
        states = [np.asarray(s, dtype=np.complex128) for s in qubit_states]
        if len(states) > max_qubits:
            raise CapacityError(f"{len(states)} qubits exceeds the statevector cap of {max_qubits}")
        amps = np.ones(1, dtype=np.complex128)
        for s in states:
            amps = np.outer(amps, s).reshape(-1)
        return cls(amps, max_qubits)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.max_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def mixer_ground_angles(bias: BiasState) -> np.ndarray:
    """``theta_j`` with ``R_y(theta_j)|0>`` the ground state of ``hx_j X - hb_j Z``."""
    hx, hb = bias.hx, bias.hb
    if np.any(hx == 0):
        raise SingularMixerError("every transverse field must be nonzero")
    r = np.hypot(hx, hb)
    # hb + lambda_min = hb - r, rewritten to avoid cancellation when hb > 0.
    pos = hb > 0
    shifted = np.where(pos, -(hx**2) / np.where(pos, hb + r, 1.0), hb - r)
    return 2.0 * np.arctan(shifted / hx)


def prepare_biased_ground(bias: BiasState, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    theta = mixer_ground_angles(bias)
    return StateVector.product(
        [(math.cos(t / 2), math.sin(t / 2)) for t in theta.tolist()], max_qubits
    )


def _mask(positions: Iterable[int], n: int) -> int:
    m = 0
    for q in positions:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
        m |= 1 << (n - 1 - q)
    return m


def _parity_sign(idx: np.ndarray, z: int) -> np.ndarray:
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z)) & 1).astype(np.float64)


def apply_pauli_exponential(s: StateVector, x: int, z: int, phi: float) -> StateVector:
    """In place ``exp(-i phi P)`` for ``P = i^{|x&z|} X^x Z^z`` given as big-endian masks."""
    amps = s.amplitudes
    c, sn = math.cos(phi), math.sin(phi)
    if x == 0:
        if z == 0:
            amps *= complex(c, -sn)
            return s
        for start in range(0, amps.size, _BLOCK):
            idx = np.arange(start, min(start + _BLOCK, amps.size), dtype=np.uint64)
            amps[start : start + idx.size] *= c - 1j * sn * _parity_sign(idx, z)
        return s
    ph = 1j ** (bin(x & z).count("1") % 4)
    t = x.bit_length() - 1
    low = (1 << t) - 1
    half = amps.size >> 1
    for start in range(0, half, _BLOCK):
        cnt = np.arange(start, min(start + _BLOCK, half), dtype=np.uint64)
        i = ((cnt >> np.uint64(t)) << np.uint64(t + 1)) | (cnt & np.uint64(low))
        j = i ^ np.uint64(x)
        a = amps[i]
        b = amps[j]
        coef = -1j * sn * ph
        amps[i] = c * a + coef * _parity_sign(j, z) * b
        amps[j] = c * b + coef * _parity_sign(i, z) * a
    return s


def apply_pauli_rotation(s: StateVector, zs: Iterable[int], y: int | None, angle: float, xs: Iterable[int] = ()) -> StateVector:
    """In place ``exp(-i (angle/2) P)`` with ``P`` = Z on ``zs``, Y on ``y``, X on ``xs``."""
    n = s.num_qubits
    zs, xs = tuple(zs), tuple(xs)
    positions = zs + xs + (() if y is None else (y,))
    if len(set(positions)) != len(positions):
        raise InvalidInputError("Pauli positions must be distinct")
    zm = _mask(zs, n)
    xm = _mask(xs, n)
    if y is not None:
        ym = _mask((y,), n)
        zm |= ym
        xm |= ym
    return apply_pauli_exponential(s, xm, zm, 0.5 * angle)


def apply_rotation(s: StateVector, rot: PauliRotation) -> StateVector:
    """Apply a program rotation ``exp(-i rot.angle P)``."""
    return apply_pauli_rotation(s, rot.z, rot.y, 2.0 * rot.angle, rot.x)


def run(program: CdProgram, initial: StateVector) -> StateVector:
    """Apply every rotation of ``program`` in order to a copy of ``initial``."""
    if program.num_qubits != initial.num_qubits:
        raise DimensionError(
            f"program acts on {program.num_qubits} qubits, state has {initial.num_qubits}"
        )
    state = initial.copy()
    for rot in program.rotations:
        apply_rotation(state, rot)
    return state


@dataclass
class SampleSet:
    """Measured bitstrings with multiplicities; qubit 0 is the leftmost character."""

    num_qubits: int
    counts: dict[str, int]

    def __post_init__(self):
        for b, c in self.counts.items():
            if len(b) != self.num_qubits:
                raise DimensionError(f"bitstring {b!r} does not have {self.num_qubits} bits")
            if c <= 0:
                raise InvalidInputError("counts must be positive")

    @property
    def shots(self) -> int:
        return int(sum(self.counts.values()))

    def __len__(self) -> int:
        return len(self.counts)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """``(bits, counts)``: a (K, N) uint8 matrix of distinct outcomes and their counts."""
        keys = sorted(self.counts)
        if not keys:
            return np.zeros((0, self.num_qubits), dtype=np.uint8), np.zeros(0, dtype=np.int64)
        bits = np.stack([as_bits(k, self.num_qubits) for k in keys])
        return bits, np.array([self.counts[k] for k in keys], dtype=np.int64)

    def energies(self, h: HuboHamiltonian) -> dict[str, float]:
        bits, _ = self.arrays()
        keys = sorted(self.counts)
        return dict(zip(keys, h.evaluate_many(bits).tolist())) if keys else {}

    def merged(self, other: "SampleSet") -> "SampleSet":
        if other.num_qubits != self.num_qubits:
            raise DimensionError("cannot merge sample sets of different widths")
        counts = dict(self.counts)
        for k, c in other.counts.items():
            counts[k] = counts.get(k, 0) + c
        return SampleSet(self.num_qubits, counts)

    def to_dict(self) -> dict:
        return {"shots": self.shots, "counts": {k: self.counts[k] for k in sorted(self.counts)}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SampleSet":
        counts = {str(k): int(v) for k, v in data["counts"].items()}
        if not counts:
            raise InvalidInputError("sample set has no counts")
        widths = {len(k) for k in counts}
        if len(widths) != 1:
            raise InvalidInputError("bitstrings have inconsistent widths")
        ss = cls(widths.pop(), counts)
        if "shots" in data and int(data["shots"]) != ss.shots:
            raise InvalidInputError("shots field disagrees with the counts total")
        return ss


def sample(s: StateVector, n_shots: int, seed: int | None = None) -> SampleSet:
    """Draw ``n_shots`` i.i.d. basis states by inverse CDF with a Philox generator."""
    if n_shots < 1:
        raise InvalidInputError("n_shots must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    cdf = np.cumsum(s.probabilities())
    u = rng.random(n_shots) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    # Zero-probability states can only be hit by rounding at the boundary; step back.
    probs = s.probabilities()
    bad = probs[idx] == 0
    if bad.any():
        nz = np.flatnonzero(probs)
        idx[bad] = nz[np.clip(np.searchsorted(nz, idx[bad]) - 1, 0, nz.size - 1)]
    uniq, counts = np.unique(idx, return_counts=True)
    n = s.num_qubits
    return SampleSet(n, {index_to_bitstring(int(i), n): int(c) for i, c in zip(uniq, counts)})


def expectation_z(samples: SampleSet, qubit: int) -> float:
    """Empirical ``<Z_qubit>`` (bit 0 counts +1, bit 1 counts -1)."""
    if samples.shots == 0:
        raise InvalidInputError("empty sample set")
    if not 0 <= qubit < samples.num_qubits:
        raise IndexError(f"qubit {qubit} out of range")
    total = 0
    for b, c in samples.counts.items():
        total += c if b[qubit] == "0" else -c
    return total / samples.shots
