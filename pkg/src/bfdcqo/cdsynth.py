"""First-order counterdiabatic circuit synthesis.

The adiabatic path is ``H(lam) = (1 - lam) H_i + lam H_f`` with the mixer
``H_i = sum_j hx_j X_j - hb_j Z_j`` and a diagonal problem Hamiltonian
``H_f``.  At first nested-commutator order the gauge potential is
``A = i alpha(lam) [H, dH/dlam] = i alpha [H_i, H_f]``, a sum of strings with a
single Y on one member of each problem term and Z on the rest.  ``alpha`` is
the minimizer of ``Tr[G^2]`` with ``G = dH - i[H, A]``, evaluated entirely in
Pauli-string algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bias import BiasState
from .errors import DimensionError, InvalidInputError
from .hubo import HuboHamiltonian
from .paulis import PauliSum

TWO_PI = 2.0 * math.pi

# Gate-angle cutoffs (soft, hard) per problem family.
DEFAULT_CUTOFFS: dict[str, tuple[float, float]] = {
    "protein": (0.006, 0.013),
    "protein:GYDPETGTWG": (0.006, 0.013),
    "protein:QPPGGSKVILF": (0.0052, 0.011),
    "protein:WTFGQGTKVEIK": (0.005, 0.013),
    "max4sat": (0.03, 0.035),
    "sk": (0.05, 0.1),
}


@dataclass(frozen=True)
class Schedule:
    """Sweep ``lam(t) = sin^2(pi/2 sin^2(pi t / 2T))`` sampled by ``n_trot`` Trotter steps.

    ``grid`` picks where the time-dependent coefficient of step k is taken:
    ``"midpoint"`` at ``(k - 1/2) dt``, ``"endpoint"`` at ``k dt`` and
    ``"integrated"`` as the exact integral of ``lam_dot * alpha`` over the step.
    """

    total_time: float = 1.0
    n_trot: int = 1
    grid: str = "integrated"

    def __post_init__(self):
        if self.total_time <= 0:
            raise InvalidInputError("total_time must be positive")
        if self.n_trot < 1:
            raise InvalidInputError("n_trot must be at least 1")
        if self.grid not in ("midpoint", "endpoint", "integrated"):
            raise InvalidInputError(f"unknown time grid {self.grid!r}")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_trot

    def lam(self, t):
        s = np.sin(np.pi * np.asarray(t, dtype=float) / (2.0 * self.total_time)) ** 2
        return np.sin(0.5 * np.pi * s) ** 2

    def lam_dot(self, t):
        t = np.asarray(t, dtype=float)
        u = 0.5 * np.pi * np.sin(np.pi * t / (2.0 * self.total_time)) ** 2
        x = t / self.total_time
        # sin(pi x) with exact zeros at the sweep ends, so an endpoint grid yields no rotations.
        sin_pi = np.where(x == np.round(x), 0.0, np.sin(np.pi * x))
        du = (np.pi**2 / (4.0 * self.total_time)) * sin_pi
        return np.sin(2.0 * u) * du

    def step_times(self) -> np.ndarray:
        k = np.arange(1, self.n_trot + 1, dtype=float)
        if self.grid == "endpoint":
            return k * self.dt
        return (k - 0.5) * self.dt

    def to_dict(self) -> dict:
        return {"total_time": self.total_time, "n_trot": self.n_trot, "grid": self.grid}


@dataclass(frozen=True)
class CdTerm:
    """One gauge-potential string: Y on ``y``, Z on ``z``; ``coefficient`` multiplies alpha."""

    z: tuple[int, ...]
    y: int
    coefficient: float
    source: tuple[int, ...]

    @property
    def weight(self) -> int:
        return len(self.z) + 1


@dataclass(frozen=True)
class PruningPolicy:
    theta_cutoff: float = 0.0
    mode: str = "none"

    def __post_init__(self):
        if not self.theta_cutoff >= 0:
            raise InvalidInputError("theta_cutoff must be non-negative")
        if self.mode not in ("none", "soft", "hard"):
            raise InvalidInputError(f"unknown pruning mode {self.mode!r}")

    @classmethod
    def none(cls) -> "PruningPolicy":
        return cls(0.0, "none")

    @classmethod
    def for_family(cls, family: str, mode: str) -> "PruningPolicy":
        if mode == "none":
            return cls.none()
        try:
            soft, hard = DEFAULT_CUTOFFS[family]
        except KeyError:
            soft, hard = DEFAULT_CUTOFFS[family.split(":")[0]]
        return cls(soft if mode == "soft" else hard, mode)

    def prunes(self, angle: float) -> bool:
        r = math.fmod(abs(angle), TWO_PI)
        return min(r, TWO_PI - r) < self.theta_cutoff

    def to_dict(self) -> dict:
        return {"theta_cutoff": self.theta_cutoff, "mode": self.mode}


@dataclass(frozen=True)
class PauliRotation:
    """The gate ``exp(-i * angle * P)`` with P = X on ``x``, Y on ``y``, Z on ``z``."""

    z: tuple[int, ...]
    y: int | None
    angle: float
    x: tuple[int, ...] = ()

    @property
    def support(self) -> tuple[int, ...]:
        extra = () if self.y is None else (self.y,)
        return tuple(sorted(self.z + self.x + extra))

    @property
    def weight(self) -> int:
        return len(self.support)

    def to_dict(self) -> dict:
        d = {"z": list(self.z), "y": self.y, "angle": self.angle}
        if self.x:
            d["x"] = list(self.x)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PauliRotation":
        return cls(tuple(d["z"]), d["y"], float(d["angle"]), tuple(d.get("x", ())))


@dataclass
class CdProgram:
    """Ordered rotations, grouped by Trotter step, plus synthesis provenance."""

    num_qubits: int
    steps: list[list[PauliRotation]]
    provenance: dict = field(default_factory=dict)

    @property
    def rotations(self) -> list[PauliRotation]:
        return [r for step in self.steps for r in step]

    @property
    def depth(self) -> int:
        return len(self.rotations)

    @property
    def generated(self) -> int:
        return int(self.provenance.get("generated", self.depth))

    @property
    def retained(self) -> int:
        return self.depth

    @property
    def pruned(self) -> int:
        return self.generated - self.retained

    def inverse(self) -> "CdProgram":
        steps = [[PauliRotation(r.z, r.y, -r.angle, r.x) for r in reversed(s)] for s in reversed(self.steps)]
        return CdProgram(self.num_qubits, steps, {"inverse_of": dict(self.provenance)})

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "steps": [[r.to_dict() for r in step] for step in self.steps],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CdProgram":
        steps = [[PauliRotation.from_dict(r) for r in step] for step in d["steps"]]
        return cls(int(d["num_qubits"]), steps, dict(d.get("provenance", {})))


def agp_terms(h: HuboHamiltonian, hx: Sequence[float]) -> list[CdTerm]:
    """Expand every problem term into one Y-string per member qubit.

    For ``J Z_S`` and ``j in S`` the string is ``Y_j Z_{S\\j}`` with coefficient
    ``2 hx_j J``, the prefactor of ``i [hx_j X_j, J Z_S]``.
    """
    hx = np.asarray(hx, dtype=float)
    if hx.size != h.num_qubits:
        raise DimensionError(f"hx has {hx.size} entries for {h.num_qubits} qubits")
    out = []
    for key, coef in h.sorted_terms():
        for j in key:
            z = tuple(q for q in key if q != j)
            out.append(CdTerm(z, j, 2.0 * hx[j] * coef, key))
    return out


def mixer_paulisum(bias: BiasState) -> PauliSum:
    return PauliSum.single_qubit_fields(bias.num_qubits, bias.hx, -bias.hb)


class AlphaCoefficients:
    """Action-minimizing first-order coefficient as a function of ``lam``.

    With ``O = [H_i, H_f]`` (independent of ``lam``), ``[H, [H, dH]]`` is linear in
    ``lam``; so numerator and denominator of ``alpha`` are a linear and a
    quadratic polynomial whose five inner products are computed once per
    (Hamiltonian, bias) pair.
    """

    def __init__(self, h: HuboHamiltonian, bias: BiasState):
        if bias.num_qubits != h.num_qubits:
            raise DimensionError("bias and Hamiltonian sizes differ")
        hf = PauliSum.from_hubo(h)
        hi = mixer_paulisum(bias)
        dh = hf - hi
        o1 = hi.commutator(hf)
        xi = hi.commutator(o1)
        xf = hf.commutator(o1)
        self.num_i = dh.inner(xi).real
        self.num_f = dh.inner(xf).real
        self.den_ii = xi.inner(xi).real
        self.den_if = xi.inner(xf).real
        self.den_ff = xf.inner(xf).real
        scale = max(self.den_ii, self.den_ff, 0.0)
        self.degenerate = scale <= 1e-300

    def numerator(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (1.0 - lam) * self.num_i + lam * self.num_f

    def denominator(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (1.0 - lam) ** 2 * self.den_ii + 2.0 * lam * (1.0 - lam) * self.den_if + lam**2 * self.den_ff

    def alpha(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.degenerate:
            return np.zeros_like(lam)[()] if lam.ndim == 0 else np.zeros_like(lam)
        den = self.denominator(lam)
        num = self.numerator(lam)
        safe = np.where(den > 0, den, 1.0)
        out = np.where(den > 0, -num / safe, 0.0)
        return float(out) if out.ndim == 0 else out

    def integral(self, lam0: float, lam1: float, nodes: int = 64) -> float:
        """``int alpha(lam) dlam`` by Gauss-Legendre quadrature."""
        if self.degenerate or lam1 == lam0:
            return 0.0
        xg, wg = np.polynomial.legendre.leggauss(nodes)
        mid, half = 0.5 * (lam0 + lam1), 0.5 * (lam1 - lam0)
        return float(half * np.sum(wg * self.alpha(mid + half * xg)))


def alpha1(h: HuboHamiltonian, bias: BiasState, lam: float) -> float:
    """First-order gauge-potential coefficient at ``lam``; 0 when all commutators vanish."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError("lam must lie in [0, 1]")
    return float(AlphaCoefficients(h, bias).alpha(lam))


def _step_weights(sched: Schedule, coeffs: AlphaCoefficients) -> list[dict]:
    """Per-step scalar multiplying each term coefficient to give its gate angle."""
    out = []
    dt = sched.dt
    for k, t in enumerate(sched.step_times(), start=1):
        lam, lam_dot = float(sched.lam(t)), float(sched.lam_dot(t))
        if sched.grid == "integrated":
            lam0 = float(sched.lam((k - 1) * dt))
            lam1 = float(sched.lam(k * dt))
            weight = coeffs.integral(lam0, lam1)
            alpha = weight / (lam1 - lam0) if lam1 != lam0 else 0.0
        else:
            alpha = float(coeffs.alpha(lam))
            weight = dt * lam_dot * alpha
        out.append({"step": k, "t": float(t), "lam": lam, "lam_dot": lam_dot, "alpha": alpha, "weight": weight})
    return out


def _adiabatic_rotations(h: HuboHamiltonian, bias: BiasState, lam: float, dt: float) -> list[PauliRotation]:
    rots = []
    for q in range(h.num_qubits):
        if bias.hx[q]:
            rots.append(PauliRotation((), None, dt * (1 - lam) * bias.hx[q], (q,)))
        if bias.hb[q]:
            rots.append(PauliRotation((q,), None, -dt * (1 - lam) * bias.hb[q]))
    for key, coef in h.sorted_terms():
        rots.append(PauliRotation(key, None, dt * lam * coef))
    return rots


def synthesize(
    h: HuboHamiltonian,
    bias: BiasState,
    sched: Schedule | None = None,
    prune: PruningPolicy | None = None,
    include_adiabatic: bool = False,
    coefficients: AlphaCoefficients | None = None,
) -> CdProgram:
    """Trotterized impulse-regime circuit: only counterdiabatic rotations, pruned by angle.

    Each retained term j of step k becomes ``exp(-i theta P_j)`` with
    ``theta = weight_k * coefficient_j``.  ``include_adiabatic`` prepends the
    first-order Trotter factors of ``H(lam)`` to every step (for comparisons).
    """
    sched = sched or Schedule()
    prune = prune or PruningPolicy.none()
    terms = agp_terms(h, bias.hx)
    coeffs = coefficients or AlphaCoefficients(h, bias)
    weights = _step_weights(sched, coeffs)
    steps: list[list[PauliRotation]] = []
    generated = retained = adiabatic = 0
    for w in weights:
        step: list[PauliRotation] = []
        if include_adiabatic:
            step.extend(_adiabatic_rotations(h, bias, w["lam"], sched.dt))
            adiabatic += len(step)
        for term in terms:
            generated += 1
            angle = w["weight"] * term.coefficient
            if not math.isfinite(angle):
                raise FloatingPointError(f"non-finite gate angle for term {term}")
            # An exactly vanishing angle is the identity; drop it under every policy.
            if angle == 0.0 or prune.prunes(angle):
                continue
            retained += 1
            step.append(PauliRotation(term.z, term.y, angle))
        steps.append(step)
    provenance = {
        "schedule": sched.to_dict(),
        "pruning": prune.to_dict(),
        "alpha_points": weights,
        "alpha_degenerate": coeffs.degenerate,
        "generated": generated + adiabatic,
        "cd_generated": generated,
        "cd_retained": retained,
        "cd_pruned": generated - retained,
    }
    return CdProgram(h.num_qubits, steps, provenance)
