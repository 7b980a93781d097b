"""Per-qubit mixer fields: transverse h^x and longitudinal bias h^b."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True, eq=False)
class BiasState:
    """Fields of the single-qubit mixer ``sum_j hx_j X_j - hb_j Z_j``.

    The sign of the bias term is chosen so that a positive ``hb_j`` favours
    spin up (bit 0), i.e. ``hb_j = <Z_j>`` pulls the next initial state toward
    the measured magnetization.
    """

    hx: np.ndarray
    hb: np.ndarray

    def __post_init__(self):
        hx = np.asarray(self.hx, dtype=np.float64).reshape(-1)
        hb = np.asarray(self.hb, dtype=np.float64).reshape(-1)
        if hx.shape != hb.shape:
            raise DimensionError(f"hx has {hx.size} entries but hb has {hb.size}")
        object.__setattr__(self, "hx", hx)
        object.__setattr__(self, "hb", hb)

    @classmethod
    def default(cls, num_qubits: int) -> "BiasState":
        return cls(-np.ones(num_qubits), np.zeros(num_qubits))

    @property
    def num_qubits(self) -> int:
        return int(self.hx.size)

    def with_bias(self, hb) -> "BiasState":
        return BiasState(self.hx.copy(), np.asarray(hb, dtype=np.float64))

    def to_dict(self) -> dict:
        return {"hx": self.hx.tolist(), "hb": self.hb.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BiasState":
        return cls(data["hx"], data["hb"])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BiasState):
            return NotImplemented
        return np.array_equal(self.hx, other.hx) and np.array_equal(self.hb, other.hb)
