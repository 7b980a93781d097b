"""Higher-order Ising (p-spin) Hamiltonians and exhaustive oracles.

A Hamiltonian is a constant plus a sum of couplings, each multiplying a
product of Pauli-Z operators on a set of distinct qubits.  Configurations are
bit vectors with bit 0 meaning spin +1 and bit 1 meaning spin -1; as strings,
qubit 0 is the leftmost character.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import CapacityError, DimensionError, InvalidInputError

ZERO_TOL = 1e-15
DEFAULT_ENUM_CAP = 26

BitsLike = Union[str, Sequence[int], np.ndarray]
TermsLike = Union[Mapping[Sequence[int], float], Iterable[tuple[Sequence[int], float]]]


def canonical_indices(indices: Iterable[int]) -> tuple[int, ...]:
    """Sorted index tuple with repeated qubits contracted via Z**2 = I."""
    odd: set[int] = set()
    for i in indices:
        i = int(i)
        if i in odd:
            odd.remove(i)
        else:
            odd.add(i)
    return tuple(sorted(odd))


def as_bits(config: BitsLike, num_qubits: int | None = None) -> np.ndarray:
    """Coerce a bitstring / sequence / array into a uint8 vector of 0s and 1s."""
    if isinstance(config, str):
        if set(config) - {"0", "1"}:
            raise InvalidInputError(f"bitstring may contain only 0/1: {config!r}")
        bits = np.frombuffer(config.encode(), dtype=np.uint8) - ord("0")
    else:
        bits = np.asarray(config)
        if bits.ndim != 1 or (bits.size and not np.isin(bits, (0, 1)).all()):
            raise InvalidInputError("configuration must be a 1-D vector of 0/1 values")
        bits = bits.astype(np.uint8)
    if num_qubits is not None and bits.size != num_qubits:
        raise DimensionError(f"configuration has {bits.size} bits, Hamiltonian has {num_qubits} qubits")
    return bits


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def index_to_bitstring(index: int, num_qubits: int) -> str:
    return format(int(index), f"0{num_qubits}b") if num_qubits else ""


def qubit_mask(indices: Iterable[int], num_qubits: int) -> int:
    """Integer mask in the big-endian convention (qubit 0 is the most significant bit)."""
    m = 0
    for q in indices:
        m |= 1 << (num_qubits - 1 - q)
    return m


class HuboHamiltonian:
    """Immutable p-spin Hamiltonian ``offset + sum_i J_i Z_{i_1} ... Z_{i_k}``.

    Inserting a tuple that is already present accumulates its coefficient;
    coefficients that end up below ``ZERO_TOL`` in magnitude are dropped.
    Arithmetic (``+``, ``-``, ``*`` with scalars or other Hamiltonians) returns
    new instances, which makes the builders read like the algebra they encode.
    """

    __slots__ = ("_num_qubits", "_terms", "_offset", "_cache")

    def __init__(
        self,
        num_qubits: int,
        terms: TermsLike = (),
        offset: float = 0.0,
        max_locality: int | None = None,
    ):
        if num_qubits < 0:
            raise InvalidInputError("num_qubits must be non-negative")
        self._num_qubits = int(num_qubits)
        acc: dict[tuple[int, ...], float] = {}
        const = float(offset)
        items = terms.items() if isinstance(terms, Mapping) else terms
        for idx, coef in items:
            key = canonical_indices(idx)
            for q in key:
                if not 0 <= q < self._num_qubits:
                    raise DimensionError(f"qubit index {q} out of range for {self._num_qubits} qubits")
            if max_locality is not None and len(key) > max_locality:
                raise InvalidInputError(f"term {key} exceeds declared locality {max_locality}")
            if not key:
                const += float(coef)
            else:
                acc[key] = acc.get(key, 0.0) + float(coef)
        self._terms = {k: v for k, v in acc.items() if abs(v) > ZERO_TOL}
        self._offset = const
        self._cache: dict = {}

    @classmethod
    def _raw(cls, num_qubits: int, terms: dict, offset: float) -> "HuboHamiltonian":
        obj = cls.__new__(cls)
        obj._num_qubits = num_qubits
        obj._terms = {k: v for k, v in terms.items() if abs(v) > ZERO_TOL}
        obj._offset = float(offset)
        obj._cache = {}
        return obj

    @classmethod
    def spin(cls, num_qubits: int, qubit: int) -> "HuboHamiltonian":
        """The single operator Z_qubit."""
        return cls(num_qubits, {(qubit,): 1.0})

    @classmethod
    def binary(cls, num_qubits: int, qubit: int) -> "HuboHamiltonian":
        """The binary variable x = (1 - Z)/2, equal to the bit value."""
        return cls(num_qubits, {(qubit,): -0.5}, offset=0.5)

    @classmethod
    def constant(cls, num_qubits: int, value: float) -> "HuboHamiltonian":
        return cls(num_qubits, offset=value)

    # -- read-only views --------------------------------------------------
    @property
    def num_qubits(self) -> int:
        return self._num_qubits

    @property
    def offset(self) -> float:
        return self._offset

    @property
    def terms(self) -> Mapping[tuple[int, ...], float]:
        return MappingProxyType(self._terms)

    @property
    def num_terms(self) -> int:
        return len(self._terms)

    @property
    def locality(self) -> int:
        return max((len(k) for k in self._terms), default=0)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return (
            f"HuboHamiltonian(num_qubits={self._num_qubits}, num_terms={len(self._terms)}, "
            f"locality={self.locality}, offset={self._offset:g})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HuboHamiltonian):
            return NotImplemented
        return (
            self._num_qubits == other._num_qubits
            and self._offset == other._offset
            and self._terms == other._terms
        )

    __hash__ = None  # type: ignore[assignment]

    def isclose(self, other: "HuboHamiltonian", atol: float = 1e-12) -> bool:
        if self._num_qubits != other._num_qubits or abs(self._offset - other._offset) > atol:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= atol for k in keys)

    def locality_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for k in self._terms:
            counts[len(k)] = counts.get(len(k), 0) + 1
        return dict(sorted(counts.items()))

    # -- algebra ----------------------------------------------------------
    def _coerce(self, other) -> "HuboHamiltonian":
        if isinstance(other, HuboHamiltonian):
            if other._num_qubits != self._num_qubits:
                raise DimensionError("cannot combine Hamiltonians of different sizes")
            return other
        return HuboHamiltonian._raw(self._num_qubits, {}, float(other))

    def __add__(self, other) -> "HuboHamiltonian":
        other = self._coerce(other)
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return HuboHamiltonian._raw(self._num_qubits, terms, self._offset + other._offset)

    __radd__ = __add__

    def __neg__(self) -> "HuboHamiltonian":
        return self * -1.0

    def __sub__(self, other) -> "HuboHamiltonian":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "HuboHamiltonian":
        return (-self) + other

    def __mul__(self, other) -> "HuboHamiltonian":
        if not isinstance(other, HuboHamiltonian):
            c = float(other)
            return HuboHamiltonian._raw(
                self._num_qubits, {k: v * c for k, v in self._terms.items()}, self._offset * c
            )
        other = self._coerce(other)
        a = [((), self._offset)] + list(self._terms.items())
        b = [((), other._offset)] + list(other._terms.items())
        terms: dict[tuple[int, ...], float] = {}
        const = 0.0
        for ka, va in a:
            if va == 0.0:
                continue
            sa = frozenset(ka)
            for kb, vb in b:
                if vb == 0.0:
                    continue
                key = tuple(sorted(sa.symmetric_difference(kb)))
                if key:
                    terms[key] = terms.get(key, 0.0) + va * vb
                else:
                    const += va * vb
        return HuboHamiltonian._raw(self._num_qubits, terms, const)

    __rmul__ = __mul__

    # -- evaluation -------------------------------------------------------
    def _grouped(self):
        """Terms grouped by locality as (index matrix, coefficient vector) pairs."""
        if "grouped" not in self._cache:
            by_k: dict[int, tuple[list, list]] = {}
            for key, coef in self._terms.items():
                idx, cf = by_k.setdefault(len(key), ([], []))
                idx.append(key)
                cf.append(coef)
            self._cache["grouped"] = [
                (np.asarray(idx, dtype=np.intp), np.asarray(cf)) for _, (idx, cf) in sorted(by_k.items())
            ]
        return self._cache["grouped"]

    def evaluate(self, config: BitsLike) -> float:
        """Energy of one configuration."""
        bits = as_bits(config, self._num_qubits)
        spins = 1.0 - 2.0 * bits
        energy = self._offset
        for idx, coef in self._grouped():
            energy += float(coef @ spins[idx].prod(axis=1))
        return float(energy)

    def evaluate_many(self, configs: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Energies of a (M, N) array of bit rows."""
        configs = np.asarray(configs)
        if configs.ndim != 2 or configs.shape[1] != self._num_qubits:
            raise DimensionError(f"expected shape (M, {self._num_qubits}), got {configs.shape}")
        out = np.full(configs.shape[0], self._offset)
        for start in range(0, configs.shape[0], chunk):
            spins = 1.0 - 2.0 * configs[start : start + chunk].astype(np.float64)
            for idx, coef in self._grouped():
                out[start : start + chunk] += spins[:, idx].prod(axis=2) @ coef
        return out

    def adjacency(self) -> list[list[tuple[tuple[int, ...], float]]]:
        """Per-qubit list of the terms that touch it."""
        if "adjacency" not in self._cache:
            adj: list[list] = [[] for _ in range(self._num_qubits)]
            for key, coef in self._terms.items():
                for q in key:
                    adj[q].append((key, coef))
            self._cache["adjacency"] = adj
        return self._cache["adjacency"]

    def flip_delta(self, spins: np.ndarray, qubit: int) -> float:
        """Energy change from flipping ``qubit``, using only the terms that touch it."""
        delta = 0.0
        for key, coef in self.adjacency()[qubit]:
            prod = coef
            for q in key:
                prod *= spins[q]
            delta -= 2.0 * prod
        return delta

    # -- serialization ----------------------------------------------------
    def sorted_terms(self) -> list[tuple[tuple[int, ...], float]]:
        return sorted(self._terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def to_dict(self) -> dict:
        return {
            "num_qubits": self._num_qubits,
            "offset": self._offset,
            "terms": [{"idx": list(k), "coef": v} for k, v in self.sorted_terms()],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HuboHamiltonian":
        try:
            n = int(data["num_qubits"])
            terms = [(t["idx"], float(t["coef"])) for t in data.get("terms", [])]
            offset = float(data.get("offset", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed Hamiltonian JSON: {exc}") from exc
        return cls(n, terms, offset)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "HuboHamiltonian":
        path = Path(source)
        text = path.read_text() if path.exists() else str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"not valid JSON: {exc}") from exc
        return cls.from_dict(data)


def evaluate(h: HuboHamiltonian, config: BitsLike) -> float:
    return h.evaluate(config)


# -- exhaustive oracles -----------------------------------------------------


@dataclass(frozen=True)
class SpectrumHistogram:
    """Distinct energy levels in increasing order with their degeneracies."""

    levels: tuple[tuple[float, int], ...]

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for e, _ in self.levels])

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([d for _, d in self.levels], dtype=np.int64)

    @property
    def total(self) -> int:
        return int(sum(d for _, d in self.levels))

    @property
    def ground_energy(self) -> float:
        return self.levels[0][0]

    def to_csv(self) -> str:
        rows = ["energy,degeneracy"] + [f"{e!r},{d}" for e, d in self.levels]
        return "\n".join(rows) + "\n"


def _check_cap(h: HuboHamiltonian, cap: int) -> None:
    if h.num_qubits > cap:
        raise CapacityError(
            f"exhaustive enumeration of {h.num_qubits} qubits exceeds the cap of {cap} qubits"
        )


def _fwht(a: np.ndarray) -> np.ndarray:
    """In-place unnormalized Walsh-Hadamard transform of a length-2^N vector."""
    h = 1
    n = a.size
    while h < n:
        v = a.reshape(-1, 2, h)
        lo = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        lo -= v[:, 1, :]
        v[:, 1, :] = lo
        h *= 2
    return a


def all_energies(h: HuboHamiltonian, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """Energy of every configuration, indexed by the integer value of its bitstring.

    Each term contributes ``J * (-1)^popcount(b & mask)``, so the energy table is
    the Walsh-Hadamard transform of the coefficient vector.
    """
    _check_cap(h, cap)
    n = h.num_qubits
    coeffs = np.zeros(1 << n)
    for key, coef in h.terms.items():
        coeffs[qubit_mask(key, n)] += coef
    energies = _fwht(coeffs)
    energies += h.offset
    return energies


def _level_tol(energies: np.ndarray) -> float:
    scale = float(np.max(np.abs(energies))) if energies.size else 1.0
    return 1e-9 * max(1.0, scale)


def brute_force_spectrum(h: HuboHamiltonian, cap: int = DEFAULT_ENUM_CAP) -> SpectrumHistogram:
    """Full energy spectrum with degeneracies; levels closer than ~1e-9 (relative) are merged."""
    energies = np.sort(all_energies(h, cap))
    tol = _level_tol(energies)
    breaks = np.flatnonzero(np.diff(energies) > tol) + 1
    starts = np.concatenate(([0], breaks))
    counts = np.diff(np.concatenate((starts, [energies.size])))
    return SpectrumHistogram(tuple((float(energies[s]), int(c)) for s, c in zip(starts, counts)))


def ground_states(h: HuboHamiltonian, cap: int = DEFAULT_ENUM_CAP) -> tuple[float, list[str]]:
    """Minimum energy and every bitstring attaining it."""
    energies = all_energies(h, cap)
    e0 = float(energies.min())
    idx = np.flatnonzero(energies <= e0 + _level_tol(energies))
    return e0, [index_to_bitstring(i, h.num_qubits) for i in idx]
