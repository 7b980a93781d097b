"""Random MAX 4-SAT at the satisfiability threshold and its Ising encoding.

Bit ``b_v = 1`` means variable ``v`` is true.  A clause is violated only when
all four literals are false; literal ``(v, negated)`` is false when
``s_v = +1`` for a plain literal and ``s_v = -1`` for a negated one, so the
violation indicator is ``prod (1 + (-1)^negated s_v) / 2``.  The Hamiltonian
``sum_c violated_c - |C|`` has energy ``-(number of satisfied clauses)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..hubo import HuboHamiltonian, as_bits

CLAUSE_SIZE = 4
CLAUSE_RATIO_TENTHS = 97

Literal = tuple[int, bool]


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self):
        clauses = tuple(tuple((int(v), bool(neg)) for v, neg in c) for c in self.clauses)
        for c in clauses:
            if len(c) != CLAUSE_SIZE:
                raise InvalidInputError(f"clause {c} does not have {CLAUSE_SIZE} literals")
            vs = [v for v, _ in c]
            if any(not 0 <= v < self.num_vars for v in vs):
                raise InvalidInputError(f"clause {c} references a variable outside 0..{self.num_vars - 1}")
            if len(set(vs)) != len(vs):
                raise InvalidInputError(f"clause {c} repeats a variable")
        object.__setattr__(self, "clauses", clauses)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def satisfied(self, assignment) -> int:
        """Number of clauses satisfied by a 0/1 truth assignment."""
        bits = as_bits(assignment, self.num_vars)
        return sum(any(bool(bits[v]) != neg for v, neg in c) for c in self.clauses)

    def satisfied_many(self, assignments: np.ndarray) -> np.ndarray:
        """Vectorized clause counting over a (M, N) truth-table slice."""
        a = np.asarray(assignments, dtype=bool)
        total = np.zeros(a.shape[0], dtype=np.int64)
        for c in self.clauses:
            sat = np.zeros(a.shape[0], dtype=bool)
            for v, neg in c:
                sat |= a[:, v] != neg
            total += sat
        return total

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {self.num_clauses}"]
        for c in self.clauses:
            lines.append(" ".join(str(-(v + 1) if neg else v + 1) for v, neg in c) + " 0")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"num_vars": self.num_vars, "clauses": [[[v, neg] for v, neg in c] for c in self.clauses]}


def parse_dimacs(source: str | Path) -> CnfFormula:
    """Parse DIMACS CNF text (or a path to it); literals are 1-based, negative = negated."""
    text = source.read_text() if isinstance(source, Path) else source
    num_vars = None
    tokens: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line[0] in "c%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise InvalidInputError(f"bad problem line: {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        try:
            tokens.extend(int(t) for t in line.split())
        except ValueError as exc:
            raise InvalidInputError(f"bad clause line: {line!r}") from exc
    if num_vars is None:
        raise InvalidInputError("missing 'p cnf' header")
    clauses, cur = [], []
    for t in tokens:
        if t == 0:
            clauses.append(tuple((abs(l) - 1, l < 0) for l in cur))
            cur = []
        else:
            cur.append(t)
    if cur:
        raise InvalidInputError("last clause is not terminated by 0")
    if len(clauses) != declared:
        raise InvalidInputError(f"header declares {declared} clauses, found {len(clauses)}")
    return CnfFormula(num_vars, tuple(clauses))


def num_threshold_clauses(num_vars: int) -> int:
    """``floor(9.7 N)`` computed in integers."""
    return num_vars * CLAUSE_RATIO_TENTHS // 10


def gen_random_4sat(num_vars: int, seed: int | None = 0) -> CnfFormula:
    if num_vars < 8:
        raise InvalidInputError("random 4-SAT needs at least 8 variables")
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(num_threshold_clauses(num_vars)):
        vs = rng.choice(num_vars, size=CLAUSE_SIZE, replace=False)
        negs = rng.integers(0, 2, size=CLAUSE_SIZE)
        clauses.append(tuple((int(v), bool(b)) for v, b in zip(vs, negs)))
    return CnfFormula(num_vars, tuple(clauses))


def build_max4sat(f: CnfFormula) -> HuboHamiltonian:
    terms: dict[tuple[int, ...], float] = {}
    scale = 1.0 / 2**CLAUSE_SIZE
    for clause in f.clauses:
        for r in range(1, CLAUSE_SIZE + 1):
            for subset in itertools.combinations(clause, r):
                sign = -1.0 if sum(neg for _, neg in subset) % 2 else 1.0
                key = tuple(sorted(v for v, _ in subset))
                terms[key] = terms.get(key, 0.0) + sign * scale
    offset = f.num_clauses * (scale - 1.0)
    return HuboHamiltonian(f.num_vars, terms, offset)


def brute_force_max_satisfied(f: CnfFormula, chunk_bits: int = 16) -> int:
    """Largest satisfied-clause count by direct scan of all assignments."""
    n = f.num_vars
    best = 0
    step = 1 << min(n, chunk_bits)
    for start in range(0, 1 << n, step):
        idx = np.arange(start, start + step, dtype=np.int64)
        bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
        best = max(best, int(f.satisfied_many(bits).max()))
    return best
