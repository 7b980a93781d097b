"""Zero-temperature single-flip local search over the best sampled configurations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .hubo import HuboHamiltonian, as_bits, bits_to_str
from .optimizer import _sorted_outcomes, tail_count
from .simulator import SampleSet


@dataclass(frozen=True)
class PpConfig:
    elite_fraction: float = 0.05
    max_sweeps: int = 3
    accept_equal: bool = True

    def __post_init__(self):
        if not 0.0 < self.elite_fraction <= 1.0:
            raise InvalidInputError("elite_fraction must lie in (0, 1]")
        if self.max_sweeps < 0:
            raise InvalidInputError("max_sweeps must be non-negative")

    def to_dict(self) -> dict:
        return {"elite_fraction": self.elite_fraction, "max_sweeps": self.max_sweeps, "accept_equal": self.accept_equal}


@dataclass(frozen=True)
class PpResult:
    energy: float
    bitstring: str
    input_best_energy: float
    converged: bool
    num_elite: int
    improved: int

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "bitstring": self.bitstring,
            "input_best_energy": self.input_best_energy,
            "converged": self.converged,
            "num_elite": self.num_elite,
            "improved": self.improved,
        }


def descend(h: HuboHamiltonian, bits, rng: np.random.Generator, cfg: PpConfig) -> tuple[np.ndarray, float, bool]:
    """Sweep single-bit flips in random order; returns (bits, energy, locally_optimal)."""
    spins = 1.0 - 2.0 * as_bits(bits, h.num_qubits).astype(float)
    energy = h.evaluate(bits)
    n = h.num_qubits
    for _ in range(cfg.max_sweeps):
        moved = False
        for q in rng.permutation(n):
            delta = h.flip_delta(spins, int(q))
            if delta < 0 or (cfg.accept_equal and delta == 0):
                spins[q] = -spins[q]
                energy += delta
                moved = moved or delta < 0
        if not moved:
            break
    out = ((1 - spins) / 2).astype(np.uint8)
    # Re-evaluate so accumulated rounding never leaks into reported energies.
    return out, h.evaluate(out), is_local_minimum(h, out)


def local_search(samples: SampleSet, h: HuboHamiltonian, cfg: PpConfig | None = None, seed: int | None = 0) -> PpResult:
    """Descend from the lowest ``ceil(elite_fraction * shots)`` shots and keep the best."""
    cfg = cfg or PpConfig()
    keys, energies, counts = _sorted_outcomes(samples, h)
    need = tail_count(cfg.elite_fraction, samples.shots)
    elite: list[str] = []
    for k, c in zip(keys, counts):
        take = int(min(c, need - len(elite)))
        elite.extend([k] * take)
        if len(elite) == need:
            break
    rng = np.random.Generator(np.random.Philox(seed))
    best_e, best_b = float(energies[0]), keys[0]
    improved = 0
    for k in elite:
        start = h.evaluate(k)
        bits, e, _ = descend(h, k, rng, cfg)
        b = bits_to_str(bits)
        improved += e < start
        if (e, b) < (best_e, best_b):
            best_e, best_b = e, b
    return PpResult(best_e, best_b, float(energies[0]), is_local_minimum(h, best_b), len(elite), int(improved))


def is_local_minimum(h: HuboHamiltonian, bits) -> bool:
    spins = 1.0 - 2.0 * as_bits(bits, h.num_qubits).astype(float)
    return all(h.flip_delta(spins, q) >= 0 for q in range(h.num_qubits))
