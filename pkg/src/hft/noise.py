"""Stochastic Pauli noise: channel definitions, samplers and circuit instrumentation.

Four channels exist: ``gate1`` (depolarizing after single-qubit gates),
``gate2`` (two-qubit depolarizing after CNOTs), ``meas`` (classical flip of a
recorded outcome) and ``idle`` (Pauli-twirled T1/T2 decay while a qubit
waits for its next operation).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .circuit import Circuit, CircuitError, Instruction
from .pauli import PauliString

CHANNELS = ("gate1", "gate2", "meas", "idle")

# index -> letter for two-qubit Paulis: code = 4 * a + b with a, b in I, X, Y, Z
_LETTER = "IXYZ"
TWO_QUBIT_PAULIS = tuple(a + b for a in _LETTER for b in _LETTER)[1:]


@dataclass(frozen=True)
class NoiseModel:
    """Circuit-level Pauli noise parameters.

    Attributes:
        p1: single-qubit depolarizing probability.
        p2: two-qubit depolarizing probability.
        p_meas: probability a recorded measurement outcome is flipped.
        t1_us: relaxation time.
        t2_us: dephasing time, at most ``2 * t1_us``.
        gate_time_1q_us: single-qubit gate duration.
        gate_time_2q_us: CNOT duration.
        meas_time_us: measurement (and reset) duration.
        enabled_channels: subset of ``CHANNELS``.
    """

    p1: float = 0.001
    p2: float = 0.01
    p_meas: float = 0.015
    t1_us: float = 100.0
    t2_us: float = 80.0
    gate_time_1q_us: float = 0.05
    gate_time_2q_us: float = 0.3
    meas_time_us: float = 1.0
    enabled_channels: frozenset = field(default_factory=lambda: frozenset(CHANNELS))

    def __post_init__(self):
        for name in ("p1", "p2", "p_meas"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if self.t1_us <= 0 or self.t2_us <= 0:
            raise ValueError("T1 and T2 must be positive")
        if self.t2_us > 2 * self.t1_us:
            raise ValueError(f"T2={self.t2_us} exceeds 2*T1={2 * self.t1_us}")
        chans = frozenset(self.enabled_channels)
        unknown = chans - set(CHANNELS)
        if unknown:
            raise ValueError(f"unknown noise channels {sorted(unknown)}")
        object.__setattr__(self, "enabled_channels", chans)

    # constructors ------------------------------------------------------------------
    @classmethod
    def noiseless(cls) -> NoiseModel:
        return cls(0.0, 0.0, 0.0, enabled_channels=frozenset())

    @classmethod
    def from_pphys(cls, p_phys: float, **kw) -> NoiseModel:
        """Proportional scaling: ``p1 = p``, ``p2 = 10 p``, ``p_meas = 15 p``."""
        return cls(p1=p_phys, p2=min(1.0, 10 * p_phys), p_meas=min(1.0, 15 * p_phys), **kw)

    def scaled(self, factor: float) -> NoiseModel:
        """Scale the three gate/readout rates, keeping T1/T2 and durations."""
        return replace(self, p1=min(1.0, self.p1 * factor), p2=min(1.0, self.p2 * factor),
                       p_meas=min(1.0, self.p_meas * factor))

    def with_channels(self, channels) -> NoiseModel:
        return replace(self, enabled_channels=frozenset(channels))

    @property
    def p_phys(self) -> float:
        return self.p1

    @property
    def is_noiseless(self) -> bool:
        return not self.enabled_channels or (
            self.rate("gate1") == self.rate("gate2") == self.rate("meas") == 0
            and "idle" not in self.enabled_channels
        )

    def rate(self, channel: str) -> float:
        if channel not in self.enabled_channels:
            return 0.0
        return {"gate1": self.p1, "gate2": self.p2, "meas": self.p_meas}.get(channel, 0.0)

    def idle_probs(self, duration_us: float) -> tuple[float, float, float]:
        return idle_pauli_probs(duration_us, self.t1_us, self.t2_us)

    # serialization ------------------------------------------------------------------
    def to_json(self) -> dict:
        d = asdict(self)
        return {
            "p1": d["p1"], "p2": d["p2"], "p_meas": d["p_meas"],
            "t1_us": d["t1_us"], "t2_us": d["t2_us"],
            "gate_times": {"1q": self.gate_time_1q_us, "2q": self.gate_time_2q_us,
                           "meas": self.meas_time_us},
            "channels": sorted(self.enabled_channels),
        }

    @classmethod
    def from_json(cls, d: dict) -> NoiseModel:
        known = {"p1", "p2", "p_meas", "t1_us", "t2_us", "gate_times", "channels", "p_phys"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown noise keys {sorted(extra)}")
        base = cls.from_pphys(float(d["p_phys"])) if "p_phys" in d else cls()
        gt = d.get("gate_times", {})
        return replace(
            base,
            p1=float(d.get("p1", base.p1)),
            p2=float(d.get("p2", base.p2)),
            p_meas=float(d.get("p_meas", base.p_meas)),
            t1_us=float(d.get("t1_us", base.t1_us)),
            t2_us=float(d.get("t2_us", base.t2_us)),
            gate_time_1q_us=float(gt.get("1q", base.gate_time_1q_us)),
            gate_time_2q_us=float(gt.get("2q", base.gate_time_2q_us)),
            meas_time_us=float(gt.get("meas", base.meas_time_us)),
            enabled_channels=frozenset(d.get("channels", CHANNELS)),
        )

    @classmethod
    def load(cls, path) -> NoiseModel:
        return cls.from_json(json.loads(Path(path).read_text()))


# channel tables -------------------------------------------------------------------------

def depolarizing_1q_probs(p) -> dict[str, Fraction]:
    """Exact channel table ``{I, X, Y, Z}``; sums to one as rationals."""
    p = Fraction(p)
    table = {"X": p / 3, "Y": p / 3, "Z": p / 3}
    table["I"] = 1 - sum(table.values())
    return table


def depolarizing_2q_probs(p) -> dict[str, Fraction]:
    p = Fraction(p)
    table = {lab: p / 15 for lab in TWO_QUBIT_PAULIS}
    table["II"] = 1 - sum(table.values())
    return table


def idle_pauli_probs(duration_us: float, t1: float, t2: float) -> tuple[float, float, float]:
    """Pauli-twirled amplitude and phase damping ``(p_x, p_y, p_z)``."""
    if duration_us < 0:
        raise ValueError("duration must be non-negative")
    if t2 > 2 * t1:
        raise ValueError(f"T2={t2} exceeds 2*T1={2 * t1}")
    a = 1 - math.exp(-duration_us / t1)
    b = 1 - math.exp(-duration_us / t2)
    px = py = a / 4
    pz = b / 2 - a / 4
    return px, py, max(pz, 0.0)


def idle_probs_table(duration_us: float, t1: float, t2: float) -> dict[str, Fraction]:
    px, py, pz = (Fraction(v) for v in idle_pauli_probs(duration_us, t1, t2))
    return {"X": px, "Y": py, "Z": pz, "I": 1 - px - py - pz}


# scalar samplers ------------------------------------------------------------------------

def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_depolarizing_1q(p: float, rng) -> PauliString:
    """Identity with probability ``1 - p``, otherwise X, Y or Z uniformly."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rng = _rng(rng)
    if rng.random() >= p:
        return PauliString.identity(1)
    return PauliString.from_label("XYZ"[rng.integers(3)])


def sample_depolarizing_2q(p: float, rng) -> tuple[PauliString, PauliString]:
    """One of the 15 non-identity two-qubit Paulis with total probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rng = _rng(rng)
    if rng.random() >= p:
        return PauliString.identity(1), PauliString.identity(1)
    lab = TWO_QUBIT_PAULIS[rng.integers(15)]
    return PauliString.from_label(lab[0]), PauliString.from_label(lab[1])


def sample_meas_flip(p: float, rng) -> bool:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return bool(_rng(rng).random() < p)


def sample_idle(duration_us: float, t1: float, t2: float, rng) -> PauliString:
    px, py, pz = idle_pauli_probs(duration_us, t1, t2)
    u = _rng(rng).random()
    if u < px:
        return PauliString.from_label("X")
    if u < px + py:
        return PauliString.from_label("Y")
    if u < px + py + pz:
        return PauliString.from_label("Z")
    return PauliString.identity(1)


# vectorized samplers (used by the frame simulator) ---------------------------------------

def sample_1q_codes(p: float, shape, rng: np.random.Generator) -> np.ndarray:
    """Pauli codes 0..3 (I, X, Y, Z) of a depolarizing channel, elementwise."""
    hit = rng.random(shape) < p
    out = np.zeros(shape, dtype=np.uint8)
    k = int(hit.sum())
    if k:
        out[hit] = rng.integers(1, 4, size=k, dtype=np.uint8)
    return out


def sample_2q_codes(p: float, shape, rng: np.random.Generator) -> np.ndarray:
    """Two-qubit codes 0..15 (``4 * a + b``); 0 is identity."""
    hit = rng.random(shape) < p
    out = np.zeros(shape, dtype=np.uint8)
    k = int(hit.sum())
    if k:
        out[hit] = rng.integers(1, 16, size=k, dtype=np.uint8)
    return out


def sample_pxyz_codes(px: float, py: float, pz: float, shape, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(shape)
    out = np.zeros(shape, dtype=np.uint8)
    out[u < px + py + pz] = 3
    out[u < px + py] = 2
    out[u < px] = 1
    return out


# instrumentation ------------------------------------------------------------------------

_ONE_Q = ("H", "S", "X", "Y", "Z")


def _durations(m: NoiseModel) -> dict[str, float]:
    d = {g: m.gate_time_1q_us for g in _ONE_Q}
    d.update({"CX": m.gate_time_2q_us, "M": m.meas_time_us, "R": m.meas_time_us})
    return d


def instrument(c: Circuit, m: NoiseModel) -> Circuit:
    """Attach noise sites for ``m`` to a copy of ``c``.

    Sites follow the gate they model and inherit its guard: ``NOISE1`` after
    each single-qubit gate, ``NOISE2`` after each CNOT, ``NOISEM`` just before
    each measurement.  Idle sites are placed by an as-soon-as-possible
    schedule: when a qubit waited since its last operation, one ``IDLE`` site
    with the accumulated duration is inserted before its next operation.
    Gaps that end in a reset are skipped, since the reset discards the error.
    The schedule follows the nominal branch, i.e. the guard values of a
    noiseless run: guarded retries and fallbacks that a noiseless run skips
    still receive gate noise but take no time on the clock.

    Raises:
        CircuitError: ``c`` already carries noise sites.
    """
    if c.instrumented or any(ins.is_noise for ins in c.instructions):
        raise CircuitError("circuit is already instrumented")
    out = Circuit(c.n_qubits, c.n_clbits, registers=dict(c.registers),
                  tables={k: v.copy() for k, v in c.tables.items()}, instrumented=True)
    p1, p2, pm = m.rate("gate1"), m.rate("gate2"), m.rate("meas")
    idle_on = "idle" in m.enabled_channels
    durations = _durations(m)
    ready = np.full(c.n_qubits, np.nan)  # NaN until first use
    nominal = _nominal_guards(c) if idle_on else {}
    for idx, ins in enumerate(c.instructions):
        guard = {"cond": ins.cond, "negate": ins.negate}
        if ins.op in durations and idle_on and nominal.get(idx, True):
            qs = list(ins.qubits)
            start = np.nanmax(np.append(ready[qs], 0.0)) if qs else 0.0
            if ins.op != "R":
                waits = [(q, start - ready[q]) for q in qs
                         if not np.isnan(ready[q]) and start - ready[q] > 1e-12]
                for q, dt in waits:
                    out.instructions.append(Instruction("IDLE", (q,), (), float(round(dt, 9))))
            ready[qs] = start + durations[ins.op]
        if ins.op == "M" and pm > 0:
            out.instructions.append(Instruction("NOISEM", ins.qubits, (), pm, **guard))
        out.instructions.append(ins)
        if ins.op in _ONE_Q and p1 > 0:
            out.instructions.append(Instruction("NOISE1", ins.qubits, (), p1, **guard))
        elif ins.op == "CX" and p2 > 0:
            out.instructions.append(Instruction("NOISE2", ins.qubits, (), p2, **guard))
    return out



def _nominal_guards(c: Circuit) -> dict[int, bool]:
    """Guard value of every guarded instruction in one noiseless run."""
    if not any(ins.cond is not None for ins in c.instructions):
        return {}
    from .sim import run_tableau  # local import: sim depends on this module

    trace: dict[int, bool] = {}
    run_tableau(c, 0, noisy=False, guard_trace=trace)
    return trace
