"""Iterative bias-field loop: prepare, evolve, sample, and feed ``<Z_j>`` back as bias."""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bias import BiasState
from .cdsynth import PruningPolicy, Schedule, synthesize
from .errors import DimensionError, InvalidInputError
from .hubo import HuboHamiltonian
from .simulator import DEFAULT_MAX_QUBITS, SampleSet, prepare_biased_ground, run, sample
from .transpile import zz_count

BIAS_MAPS = ("identity", "sign", "scaled")


@dataclass(frozen=True)
class CvarConfig:
    alpha: float = 0.1
    n_shots: int = 2000
    bias_map: str = "identity"
    kappa: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidInputError("CVaR alpha must lie in (0, 1]")
        if self.n_shots < 1:
            raise InvalidInputError("n_shots must be at least 1")
        if self.bias_map not in BIAS_MAPS:
            raise InvalidInputError(f"unknown bias map {self.bias_map!r}; choose from {BIAS_MAPS}")

    def map_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.bias_map == "sign":
            return np.sign
        if self.bias_map == "scaled":
            return lambda m: self.kappa * m
        return lambda m: np.asarray(m, dtype=float).copy()

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "n_shots": self.n_shots, "bias_map": self.bias_map, "kappa": self.kappa}


def tail_count(alpha: float, n: int) -> int:
    """``ceil(alpha * n)``, robust to binary rounding of products like 0.1 * 2000."""
    return max(1, min(n, math.ceil(round(alpha * n, 9))))


def _sorted_outcomes(samples: SampleSet, h: HuboHamiltonian):
    if samples.shots == 0:
        raise InvalidInputError("empty sample set")
    if samples.num_qubits != h.num_qubits:
        raise DimensionError("sample width does not match the Hamiltonian")
    bits, counts = samples.arrays()
    energies = h.evaluate_many(bits)
    keys = sorted(samples.counts)
    order = sorted(range(len(keys)), key=lambda i: (energies[i], keys[i]))
    return [keys[i] for i in order], energies[order], counts[order]


def cvar_filter(samples: SampleSet, h: HuboHamiltonian, alpha: float) -> tuple[SampleSet, np.ndarray]:
    """The lowest ``ceil(alpha * shots)`` shots (ties broken by bitstring) and their energies."""
    keys, energies, counts = _sorted_outcomes(samples, h)
    need = tail_count(alpha, samples.shots)
    kept: dict[str, int] = {}
    taken = []
    for k, e, c in zip(keys, energies, counts):
        if need == 0:
            break
        m = int(min(c, need))
        kept[k] = m
        taken.append((e, m))
        need -= m
    flat = np.repeat([e for e, _ in taken], [m for _, m in taken])
    return SampleSet(samples.num_qubits, kept), flat


def cvar_energy(samples: SampleSet, h: HuboHamiltonian, alpha: float) -> float:
    """Mean of the lowest ``ceil(alpha * shots)`` sampled energies."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidInputError("CVaR alpha must lie in (0, 1]")
    _, flat = cvar_filter(samples, h, alpha)
    return float(np.mean(flat))


def mean_energy(samples: SampleSet, h: HuboHamiltonian) -> float:
    _, energies, counts = _sorted_outcomes(samples, h)
    return float(np.dot(energies, counts) / counts.sum())


def magnetization(samples: SampleSet) -> np.ndarray:
    bits, counts = samples.arrays()
    if counts.sum() == 0:
        raise InvalidInputError("empty sample set")
    return (1.0 - 2.0 * bits.astype(float)).T @ counts / counts.sum()


def update_bias(samples: SampleSet, h: HuboHamiltonian, cfg: CvarConfig, prev: BiasState) -> BiasState:
    """Set ``hb_j = g(<Z_j>)`` over the CVaR tail; ``hx`` is carried over."""
    tail, _ = cvar_filter(samples, h, cfg.alpha)
    if tail.shots == 0:
        raise InvalidInputError("CVaR tail is empty")
    return prev.with_bias(cfg.map_fn()(magnetization(tail)))


def sample_digest(samples: SampleSet) -> str:
    return hashlib.sha256(samples.to_json().encode()).hexdigest()[:16]


@dataclass
class IterationRecord:
    iteration: int
    bias: BiasState
    pruning: dict
    best_energy: float
    best_bitstring: str
    cvar_energy: float
    mean_energy: float
    zz_count: int
    digest: str
    global_best_energy: float
    global_best_bitstring: str
    warnings: list[str] = field(default_factory=list)
    samples: SampleSet | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "bias": self.bias.to_dict(),
            "pruning": self.pruning,
            "best_energy": self.best_energy,
            "best_bitstring": self.best_bitstring,
            "cvar_energy": self.cvar_energy,
            "mean_energy": self.mean_energy,
            "zz_count": self.zz_count,
            "sample_digest": self.digest,
            "global_best_energy": self.global_best_energy,
            "global_best_bitstring": self.global_best_bitstring,
            "warnings": list(self.warnings),
        }


def iteration_seeds(seed: int | None, iters: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(iters, dtype=np.uint64)]


def optimize(
    h: HuboHamiltonian,
    sched: Schedule | None = None,
    prune: PruningPolicy | None = None,
    cfg: CvarConfig | None = None,
    iters: int = 10,
    seed: int | None = 0,
    bias: BiasState | None = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[IterationRecord]:
    """Run ``iters`` biased DCQO iterations; each record carries its samples."""
    if iters < 1:
        raise InvalidInputError("iters must be at least 1")
    sched = sched or Schedule()
    prune = prune or PruningPolicy.none()
    cfg = cfg or CvarConfig()
    bias = bias or BiasState.default(h.num_qubits)
    if bias.num_qubits != h.num_qubits:
        raise DimensionError("bias and Hamiltonian sizes differ")
    records: list[IterationRecord] = []
    g_energy, g_bits = math.inf, ""
    for it, it_seed in enumerate(iteration_seeds(seed, iters)):
        notes = []
        state = prepare_biased_ground(bias, max_qubits)
        program = synthesize(h, bias, sched, prune)
        if program.depth == 0:
            notes.append("program empty after pruning; sampling the prepared product state")
            warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        final = run(program, state)
        shots = sample(final, cfg.n_shots, it_seed)
        keys, energies, _ = _sorted_outcomes(shots, h)
        best_e, best_b = float(energies[0]), keys[0]
        if best_e < g_energy:
            g_energy, g_bits = best_e, best_b
        records.append(
            IterationRecord(
                iteration=it,
                bias=bias,
                pruning={
                    "generated": program.generated,
                    "retained": program.retained,
                    "pruned": program.pruned,
                    "theta_cutoff": prune.theta_cutoff,
                    "mode": prune.mode,
                },
                best_energy=best_e,
                best_bitstring=best_b,
                cvar_energy=cvar_energy(shots, h, cfg.alpha),
                mean_energy=mean_energy(shots, h),
                zz_count=zz_count(program),
                digest=sample_digest(shots),
                global_best_energy=g_energy,
                global_best_bitstring=g_bits,
                warnings=notes,
                samples=shots,
            )
        )
        bias = update_bias(shots, h, cfg, bias)
    return records


def merged_samples(records: list[IterationRecord]) -> SampleSet:
    out = records[0].samples
    for r in records[1:]:
        out = out.merged(r.samples)
    return out
