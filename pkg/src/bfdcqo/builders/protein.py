"""Coarse-grained lattice protein folding on the tetrahedral (diamond) lattice.

Every bond ("turn") ``t_k`` between beads ``k`` and ``k+1`` takes one of four
values encoded in two qubits ``(q_{2k-1}, q_{2k})`` as ``t = 2 q_{2k-1} + q_{2k}``.
Beads alternate between the two sublattices, so bead ``k+1`` sits at
``r_k + (-1)^k e_t`` with the four tetrahedral directions ``e_t``.  Symmetry
fixes ``t_1 = 1``, ``t_2 = 0`` and ``q_6 = 1``; the remaining ``2 N_a - 7``
configuration qubits are free.

With ``f_a(t)`` the one-hot indicator of turn value ``a`` and
``dn_a(i, j) = sum_{k=i}^{j-1} (-1)^k f_a(t_k)``, the squared distance between
beads ``i`` and ``j`` is ``4 d_ij - (sum_a dn_a)^2`` with ``d_ij = sum_a dn_a^2``.
Beads at odd chain separation touch iff ``d_ij = 1``; beads at even
separation coincide iff ``d_ij = 0``.

The Hamiltonian is ``H_gc + H_in``:

* ``H_gc = lambda_gc sum_k sum_a f_a(t_k) f_a(t_{k+1})`` forbids immediate
  backtracking (two consecutive turns on the same axis).
* For every candidate contact ``(i, j)`` (odd separation of at least 5) an
  interaction qubit ``x_ij`` adds ``x_ij [eps_ij + lambda_in (w (d_ij - 1)
  + sum_nb (2 - d_nb))]``.  The neighbour pairs ``nb`` are ``(i +- 1, j)`` and
  ``(i, j +- 1)``; an active contact whose neighbouring bead lands on the
  partner's site pays ``2 lambda_in``.  The weight ``w = 2 n_nb + 1`` keeps the
  bracket positive whenever ``d_ij > 1``.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..errors import DimensionError, InvalidInputError
from ..hubo import HuboHamiltonian, as_bits

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
TETRA_DIRECTIONS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
FIXED_CONFIG_BITS = {1: 0, 2: 1, 3: 0, 4: 0, 6: 1}
MIN_CONTACT_SEPARATION = 5


@dataclass(frozen=True)
class PeptideSequence:
    residues: str

    def __post_init__(self):
        res = str(self.residues).strip().upper()
        bad = sorted(set(res) - set(AMINO_ACIDS))
        if bad:
            raise InvalidInputError(f"unknown residue letter(s): {''.join(bad)}")
        if len(res) < 4:
            raise InvalidInputError("a peptide needs at least 4 residues")
        object.__setattr__(self, "residues", res)

    def __len__(self) -> int:
        return len(self.residues)

    def __getitem__(self, k):
        return self.residues[k]

    def __str__(self) -> str:
        return self.residues


class ContactEnergyTable:
    """Symmetric residue-pair contact energies in RT units."""

    def __init__(self, energies: Mapping[tuple[str, str], float]):
        table: dict[tuple[str, str], float] = {}
        for (a, b), e in energies.items():
            a, b = a.upper(), b.upper()
            key = (min(a, b), max(a, b))
            if key in table and table[key] != float(e):
                raise InvalidInputError(f"asymmetric entries for pair {a}-{b}")
            table[key] = float(e)
        self._table = table

    @classmethod
    def from_csv(cls, source: str | Path) -> "ContactEnergyTable":
        """Read ``res1,res2,energy`` rows from a path or from CSV text."""
        text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else source
        rows = csv.DictReader(io.StringIO(text))
        try:
            return cls({(r["res1"].strip(), r["res2"].strip()): float(r["energy"]) for r in rows})
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed contact table: {exc}") from exc

    @classmethod
    def default(cls) -> "ContactEnergyTable":
        """The bundled Miyazawa-Jernigan style table (see the data file header)."""
        text = resources.files(__package__).joinpath("data/mj_contacts.csv").read_text()
        return cls.from_csv(text)

    @classmethod
    def uniform(cls, value: float, residues: str = AMINO_ACIDS) -> "ContactEnergyTable":
        return cls({(a, b): value for a, b in itertools.combinations_with_replacement(residues, 2)})

    def energy(self, a: str, b: str) -> float:
        key = (min(a, b), max(a, b))
        try:
            return self._table[key]
        except KeyError:
            raise InvalidInputError(f"no contact energy for pair {a}-{b}") from None

    def covers(self, seq: PeptideSequence) -> bool:
        present = set(seq.residues)
        return all((min(a, b), max(a, b)) in self._table for a in present for b in present)

    def to_csv(self) -> str:
        lines = ["res1,res2,energy"] + [f"{a},{b},{e!r}" for (a, b), e in sorted(self._table.items())]
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self._table)


@dataclass(frozen=True)
class ProteinEncoding:
    num_residues: int
    lambda_gc: float = 10.0
    lambda_in: float = 10.0

    def __post_init__(self):
        if self.num_residues < 4:
            raise InvalidInputError("a peptide needs at least 4 residues")

    @property
    def num_turns(self) -> int:
        return self.num_residues - 1

    @cached_property
    def free_config_bits(self) -> tuple[int, ...]:
        """1-based indices ``m`` of the free ``q_m``, in qubit order."""
        return tuple(m for m in range(1, 2 * self.num_turns + 1) if m not in FIXED_CONFIG_BITS)

    @property
    def num_config_qubits(self) -> int:
        return len(self.free_config_bits)

    @cached_property
    def contact_pairs(self) -> tuple[tuple[int, int], ...]:
        """1-based bead pairs that can touch: odd separation of at least 5 bonds."""
        n = self.num_residues
        return tuple(
            (i, j)
            for i in range(1, n + 1)
            for j in range(i + MIN_CONTACT_SEPARATION, n + 1)
            if (j - i) % 2 == 1
        )

    @property
    def num_interaction_qubits(self) -> int:
        return len(self.contact_pairs)

    @property
    def num_qubits(self) -> int:
        return self.num_config_qubits + self.num_interaction_qubits

    def config_qubit(self, m: int) -> int | None:
        """Qubit index of ``q_m`` or ``None`` when the bit is fixed."""
        return None if m in FIXED_CONFIG_BITS else self.free_config_bits.index(m)

    def interaction_qubit(self, i: int, j: int) -> int:
        return self.num_config_qubits + self.contact_pairs.index((i, j))

    def turns(self, bits) -> list[int]:
        """Turn values ``t_1..t_{N_a-1}`` from a full or config-only bit vector."""
        bits = as_bits(bits)
        if bits.size not in (self.num_qubits, self.num_config_qubits):
            raise DimensionError(
                f"expected {self.num_qubits} (or {self.num_config_qubits}) bits, got {bits.size}"
            )
        q = dict(FIXED_CONFIG_BITS)
        q.update({m: int(bits[k]) for k, m in enumerate(self.free_config_bits)})
        return [2 * q[2 * k - 1] + q[2 * k] for k in range(1, self.num_turns + 1)]

    def to_dict(self) -> dict:
        return {
            "num_residues": self.num_residues,
            "lambda_gc": self.lambda_gc,
            "lambda_in": self.lambda_in,
            "num_config_qubits": self.num_config_qubits,
            "num_interaction_qubits": self.num_interaction_qubits,
            "free_config_bits": list(self.free_config_bits),
            "fixed_config_bits": {str(k): v for k, v in FIXED_CONFIG_BITS.items()},
            "contact_pairs": [list(p) for p in self.contact_pairs],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProteinEncoding":
        return cls(int(d["num_residues"]), float(d["lambda_gc"]), float(d["lambda_in"]))


@dataclass
class ProteinInstance:
    hamiltonian: HuboHamiltonian
    sequence: PeptideSequence
    encoding: ProteinEncoding
    contact_energies: dict[tuple[int, int], float] = field(default_factory=dict)

    def metadata(self) -> dict:
        """Sidecar data needed to decode bitstrings back into folds."""
        return {
            "family": "protein",
            "sequence": self.sequence.residues,
            "encoding": self.encoding.to_dict(),
            "contact_energies": [[i, j, e] for (i, j), e in sorted(self.contact_energies.items())],
        }


def _turn_indicators(enc: ProteinEncoding, n: int) -> list[list[HuboHamiltonian]]:
    """``f[k][a]`` for 1-based turn ``k`` and value ``a`` as binary polynomials."""

    def var(m: int) -> HuboHamiltonian:
        q = enc.config_qubit(m)
        if q is None:
            return HuboHamiltonian.constant(n, FIXED_CONFIG_BITS[m])
        return HuboHamiltonian.binary(n, q)

    one = HuboHamiltonian.constant(n, 1.0)
    f: list[list[HuboHamiltonian]] = [[]]
    for k in range(1, enc.num_turns + 1):
        a, b = var(2 * k - 1), var(2 * k)
        f.append([(one - a) * (one - b), (one - a) * b, a * (one - b), a * b])
    return f


def _distance_polys(f, n: int):
    """Memoized ``d_ij`` as binary polynomials."""
    zero = HuboHamiltonian(n)
    cache: dict[tuple[int, int], HuboHamiltonian] = {}

    def d(i: int, j: int) -> HuboHamiltonian:
        if (i, j) not in cache:
            total = zero
            for a in range(4):
                dn = zero
                for k in range(i, j):
                    dn = dn + f[k][a] * float((-1) ** k)
                total = total + dn * dn
            cache[(i, j)] = total
        return cache[(i, j)]

    return d


def _clean(h: HuboHamiltonian, tol: float = 1e-10) -> HuboHamiltonian:
    return HuboHamiltonian(h.num_qubits, {k: v for k, v in h.terms.items() if abs(v) > tol}, h.offset)


def build_protein(
    seq: PeptideSequence | str,
    table: ContactEnergyTable | None = None,
    enc: ProteinEncoding | None = None,
) -> ProteinInstance:
    if not isinstance(seq, PeptideSequence):
        seq = PeptideSequence(seq)
    table = table or ContactEnergyTable.default()
    enc = enc or ProteinEncoding(len(seq))
    if enc.num_residues != len(seq):
        raise DimensionError("encoding and sequence lengths differ")
    n = enc.num_qubits
    f = _turn_indicators(enc, n)
    h = HuboHamiltonian(n)
    for k in range(1, enc.num_turns):
        for a in range(4):
            h = h + f[k][a] * f[k + 1][a] * enc.lambda_gc
    d = _distance_polys(f, n)
    one = HuboHamiltonian.constant(n, 1.0)
    eps_map = {}
    nres = enc.num_residues
    for i, j in enc.contact_pairs:
        eps = table.energy(seq[i - 1], seq[j - 1])
        eps_map[(i, j)] = eps
        nbs = [(a, b) for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)) if 1 <= a < b <= nres]
        w = 2 * len(nbs) + 1
        bracket = one * eps + (d(i, j) - one) * (w * enc.lambda_in)
        for a, b in nbs:
            bracket = bracket + (one * 2.0 - d(a, b)) * enc.lambda_in
        h = h + HuboHamiltonian.binary(n, enc.interaction_qubit(i, j)) * bracket
    return ProteinInstance(_clean(h), seq, enc, eps_map)


@dataclass(frozen=True)
class Fold:
    turns: tuple[int, ...]
    coordinates: np.ndarray
    valid: bool
    contacts: tuple[tuple[int, int], ...]


def turns_to_coordinates(turns: Sequence[int]) -> np.ndarray:
    coords = np.zeros((len(turns) + 1, 3), dtype=np.int64)
    for k, t in enumerate(turns, start=1):
        coords[k] = coords[k - 1] + (-1) ** k * TETRA_DIRECTIONS[t]
    return coords


def lattice_contacts(coords: np.ndarray) -> tuple[tuple[int, int], ...]:
    """1-based non-consecutive bead pairs at nearest-neighbour distance."""
    diff = coords[:, None, :] - coords[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.nonzero(np.triu(d2 == 3, k=2))
    return tuple((int(a) + 1, int(b) + 1) for a, b in zip(i, j))


def is_self_avoiding(coords: np.ndarray) -> bool:
    return len({tuple(c) for c in coords.tolist()}) == len(coords)


def decode_fold(bits, enc: ProteinEncoding) -> Fold:
    turns = enc.turns(bits)
    coords = turns_to_coordinates(turns)
    return Fold(tuple(turns), coords, is_self_avoiding(coords), lattice_contacts(coords))


def fold_energy(seq: PeptideSequence, table: ContactEnergyTable, coords: np.ndarray) -> float:
    """Sum of contact energies over realized non-consecutive nearest-neighbour pairs."""
    return float(sum(table.energy(seq[i - 1], seq[j - 1]) for i, j in lattice_contacts(coords)))


def encode_fold(turns: Sequence[int], enc: ProteinEncoding, contacts: Sequence[tuple[int, int]] = ()) -> np.ndarray:
    """Bit vector realizing ``turns`` with the given interaction qubits switched on."""
    if len(turns) != enc.num_turns:
        raise DimensionError(f"expected {enc.num_turns} turns")
    q = {}
    for k, t in enumerate(turns, start=1):
        q[2 * k - 1], q[2 * k] = t >> 1, t & 1
    for m, v in FIXED_CONFIG_BITS.items():
        if q[m] != v:
            raise InvalidInputError(f"turns violate the fixed bit q_{m} = {v}")
    bits = np.zeros(enc.num_qubits, dtype=np.uint8)
    bits[: enc.num_config_qubits] = [q[m] for m in enc.free_config_bits]
    for pair in contacts:
        bits[enc.interaction_qubit(*pair)] = 1
    return bits


def feasibility_counts(num_residues: int) -> tuple[int, int]:
    """``(2 * 3^(N_a-4), 2 * 4^(N_a-4) - 2 * 3^(N_a-4))``: no-backtrack bound and its complement."""
    if num_residues < 4:
        raise InvalidInputError("a peptide needs at least 4 residues")
    bound = 2 * 3 ** (num_residues - 4)
    return bound, 2 * 4 ** (num_residues - 4) - bound
