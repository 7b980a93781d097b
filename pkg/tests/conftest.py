"""Dense-matrix oracles shared by the test modules.

Everything here is deliberately naive: operators are built from Kronecker
products of 2x2 matrices with qubit 0 as the leftmost factor, so they share no
code with the sparse Pauli algebra or the statevector kernels under test.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

ACCEPTANCE_LINES: list[str] = []


def pauli_matrix(label: str) -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in label])


def label_for(n: int, z=(), y=(), x=()) -> str:
    chars = ["I"] * n
    for q in z:
        chars[q] = "Z"
    for q in x:
        chars[q] = "X"
    for q in y:
        chars[q] = "Y"
    return "".join(chars)


def dense_hubo(h) -> np.ndarray:
    n = h.num_qubits
    m = h.offset * np.eye(1 << n, dtype=complex)
    for key, coef in h.terms.items():
        m += coef * pauli_matrix(label_for(n, z=key))
    return m


def dense_mixer(hx, hb) -> np.ndarray:
    n = len(hx)
    m = np.zeros((1 << n, 1 << n), dtype=complex)
    for q in range(n):
        m += hx[q] * pauli_matrix(label_for(n, x=(q,)))
        m -= hb[q] * pauli_matrix(label_for(n, z=(q,)))
    return m


def dense_alpha(h, hx, hb, lam: float) -> float:
    """Minimizer of ``Tr[G^2]`` with ``G = dH + alpha [H, [H, dH]]``, all dense."""
    hi, hf = dense_mixer(hx, hb), dense_hubo(h)
    H = (1 - lam) * hi + lam * hf
    dH = hf - hi
    c = H @ dH - dH @ H
    M = H @ c - c @ H
    den = np.trace(M @ M).real
    return 0.0 if den == 0 else float(-np.trace(dH @ M).real / den)


def random_hubo(rng: np.random.Generator, n: int, max_k: int, num_terms: int, offset: bool = True):
    from bfdcqo.hubo import HuboHamiltonian

    terms = {}
    for _ in range(num_terms):
        k = int(rng.integers(1, max_k + 1))
        key = tuple(sorted(rng.choice(n, size=min(k, n), replace=False).tolist()))
        terms[key] = float(rng.normal())
    return HuboHamiltonian(n, terms, float(rng.normal()) if offset else 0.0)


def brute_energies(h) -> np.ndarray:
    """Energy of every bitstring by direct evaluation, indexed big-endian."""
    n = h.num_qubits
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    spins = 1 - 2 * bits
    e = np.full(idx.size, h.offset, dtype=float)
    for key, coef in h.terms.items():
        e += coef * spins[:, list(key)].prod(axis=1)
    return e


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
