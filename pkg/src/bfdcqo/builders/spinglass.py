"""Fully connected Sherrington-Kirkpatrick instances with Gaussian fields and couplings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from ..hubo import HuboHamiltonian


@dataclass(frozen=True)
class SkInstanceConfig:
    """Field and coupling distributions; the second moments are variances, not deviations."""

    n: int
    field_mean: float = 0.42
    field_var: float = 0.14
    coupling_mean: float = 0.045
    coupling_var: float = 0.03
    seed: int | None = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("an SK instance needs at least 2 spins")
        if self.field_var <= 0 or self.coupling_var <= 0:
            raise InvalidInputError("variances must be positive")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "field_mean": self.field_mean,
            "field_var": self.field_var,
            "coupling_mean": self.coupling_mean,
            "coupling_var": self.coupling_var,
            "seed": self.seed,
        }


def gen_sk(cfg: SkInstanceConfig) -> HuboHamiltonian:
    """``sum_i h_i Z_i + sum_{i<j} J_ij Z_i Z_j`` with every pair present."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    h = rng.normal(cfg.field_mean, math.sqrt(cfg.field_var), size=n)
    iu, ju = np.triu_indices(n, k=1)
    j = rng.normal(cfg.coupling_mean, math.sqrt(cfg.coupling_var), size=iu.size)
    terms = {(i,): float(v) for i, v in enumerate(h)}
    terms.update({(int(a), int(b)): float(v) for a, b, v in zip(iu, ju, j)})
    return HuboHamiltonian(n, terms)
