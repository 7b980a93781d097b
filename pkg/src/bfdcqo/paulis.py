"""Sparse Pauli-sum algebra in the symplectic (x, z) representation.

A string with masks ``(x, z)`` denotes ``i^{|x & z|} X^x Z^z``, so every
string is Hermitian and a qubit with both bits set carries a Y.  Masks are
uint64 (up to 64 qubits).  Products, commutators and the normalized trace
inner product ``Tr[A^dagger B] / 2^N`` are vectorized over all term pairs.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .hubo import HuboHamiltonian, qubit_mask

MAX_QUBITS = 64
_I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


class PauliSum:
    """Linear combination of Pauli strings with complex coefficients."""

    __slots__ = ("num_qubits", "x", "z", "coef")

    def __init__(self, num_qubits: int, x=(), z=(), coef=(), *, simplify: bool = True):
        if num_qubits > MAX_QUBITS:
            raise ValueError(f"PauliSum supports at most {MAX_QUBITS} qubits")
        self.num_qubits = num_qubits
        self.x = np.asarray(x, dtype=np.uint64).reshape(-1)
        self.z = np.asarray(z, dtype=np.uint64).reshape(-1)
        self.coef = np.asarray(coef, dtype=np.complex128).reshape(-1)
        if simplify:
            self._simplify()

    def _simplify(self, tol: float = 1e-14) -> None:
        if self.coef.size == 0:
            return
        keys = np.stack([self.x, self.z], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        coef = np.zeros(len(uniq), dtype=np.complex128)
        np.add.at(coef, inv, self.coef)
        keep = np.abs(coef) > tol
        self.x = np.ascontiguousarray(uniq[keep, 0])
        self.z = np.ascontiguousarray(uniq[keep, 1])
        self.coef = coef[keep]

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_labels(cls, num_qubits: int, items: Iterable[tuple[str, complex]]) -> "PauliSum":
        """Build from ``("XIZY", c)`` labels, qubit 0 leftmost."""
        xs, zs, cs = [], [], []
        for label, c in items:
            if len(label) != num_qubits:
                raise ValueError(f"label {label!r} has wrong length")
            xm = zm = 0
            for q, ch in enumerate(label):
                bit = 1 << (num_qubits - 1 - q)
                if ch in "XY":
                    xm |= bit
                if ch in "ZY":
                    zm |= bit
            xs.append(xm)
            zs.append(zm)
            cs.append(c)
        return cls(num_qubits, xs, zs, cs)

    @classmethod
    def from_hubo(cls, h: HuboHamiltonian, include_offset: bool = False) -> "PauliSum":
        n = h.num_qubits
        zs = [qubit_mask(k, n) for k in h.terms]
        cs = list(h.terms.values())
        xs = [0] * len(zs)
        if include_offset and h.offset:
            xs.append(0)
            zs.append(0)
            cs.append(h.offset)
        return cls(n, xs, zs, cs)

    @classmethod
    def single_qubit_fields(cls, num_qubits: int, x_fields, z_fields) -> "PauliSum":
        """``sum_j x_fields[j] X_j + z_fields[j] Z_j``."""
        xs, zs, cs = [], [], []
        for q in range(num_qubits):
            bit = 1 << (num_qubits - 1 - q)
            if x_fields[q]:
                xs.append(bit)
                zs.append(0)
                cs.append(x_fields[q])
            if z_fields[q]:
                xs.append(0)
                zs.append(bit)
                cs.append(z_fields[q])
        return cls(num_qubits, xs, zs, cs)

    # -- basic protocol ---------------------------------------------------
    def __len__(self) -> int:
        return int(self.coef.size)

    def __repr__(self) -> str:
        return f"PauliSum(num_qubits={self.num_qubits}, num_terms={len(self)})"

    def labels(self) -> list[tuple[str, complex]]:
        out = []
        for xm, zm, c in zip(self.x.tolist(), self.z.tolist(), self.coef.tolist()):
            chars = []
            for q in range(self.num_qubits):
                bit = 1 << (self.num_qubits - 1 - q)
                chars.append("IZXY"[(bool(xm & bit) << 1) | bool(zm & bit)])
            out.append(("".join(chars), c))
        return out

    def _check(self, other: "PauliSum") -> None:
        if other.num_qubits != self.num_qubits:
            raise ValueError("PauliSum size mismatch")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        return PauliSum(
            self.num_qubits,
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.coef, other.coef]),
        )

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other * -1.0

    def __mul__(self, scalar: complex) -> "PauliSum":
        return PauliSum(self.num_qubits, self.x, self.z, self.coef * scalar, simplify=False)

    __rmul__ = __mul__

    # -- products ---------------------------------------------------------
    def _pairs(self, other: "PauliSum", commutator: bool, block: int = 1 << 21) -> "PauliSum":
        self._check(other)
        if len(self) == 0 or len(other) == 0:
            return PauliSum(self.num_qubits)
        x2, z2, c2 = other.x[None, :], other.z[None, :], other.coef[None, :]
        rows = max(1, block // len(other))
        xs, zs, cs = [], [], []
        for start in range(0, len(self), rows):
            sl = slice(start, start + rows)
            x1, z1, c1 = self.x[sl, None], self.z[sl, None], self.coef[sl, None]
            x = x1 ^ x2
            z = z1 ^ z2
            phase = (
                _popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2) - _popcount(x & z)
            ) % 4
            coef = c1 * c2 * _I_POWERS[phase]
            if commutator:
                mask = ((_popcount(x1 & z2) + _popcount(z1 & x2)) & 1).astype(bool)
                xs.append(x[mask])
                zs.append(z[mask])
                cs.append(2.0 * coef[mask])
            else:
                x, z, coef = np.broadcast_arrays(x, z, coef)
                xs.append(x.ravel())
                zs.append(z.ravel())
                cs.append(coef.ravel())
        return PauliSum(self.num_qubits, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs))

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return self._pairs(other, commutator=False)

    def commutator(self, other: "PauliSum") -> "PauliSum":
        """``[self, other]``; only anticommuting string pairs survive, each doubled."""
        return self._pairs(other, commutator=True)

    def inner(self, other: "PauliSum") -> complex:
        """Normalized trace inner product ``Tr[self^dagger other] / 2^N``."""
        self._check(other)
        if len(self) == 0 or len(other) == 0:
            return 0j
        keys = np.concatenate(
            [np.stack([self.x, self.z], axis=1), np.stack([other.x, other.z], axis=1)]
        )
        _, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        m = int(inv.max()) + 1
        a = np.zeros(m, dtype=np.complex128)
        b = np.zeros(m, dtype=np.complex128)
        np.add.at(a, inv[: len(self)], self.coef)
        np.add.at(b, inv[len(self) :], other.coef)
        return complex(np.vdot(a, b))

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.coef) ** 2))
