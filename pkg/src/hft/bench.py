"""Monte-Carlo experiments: memory runs, workloads, method comparison and threshold sweeps.

Every experiment runs one circuit (noiseless encoder, instrumented cycle)
through the Pauli-frame sampler.  A shot fails when its residual data error,
after an ideal minimum-weight decode, flips the tracked logical observable.
Results carry Wilson 95% intervals and everything needed to re-run them.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .builders import LAYER_GATES, SchedulerConfig, memory_circuit, prep_statistics, schedule_cycle
from .circuit import Circuit, circuit_stats
from .codes import CssCode, get_code, logical_flips
from .noise import CHANNELS, NoiseModel, instrument
from .sim import FrameSimulator

SCHEMA_VERSION = 1
P_TH = 0.01
A_MODEL = 0.1
WORKLOADS = ("memory", "rb_depth", "t_heavy")

__all__ = [
    "SCHEMA_VERSION", "Workload", "ExperimentConfig", "BenchResult", "ThresholdPoint",
    "estimate_rate", "run_memory", "run_workload", "analytic_p_log", "sweep_threshold",
    "method_comparison_report", "cat_verification_rate", "crossing_point", "loglog_slope",
    "prep_statistics", "envelope", "to_json_text", "to_csv_text", "write_atomic",
]


# configuration ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Workload:
    """What runs between correction rounds.

    Attributes:
        kind: ``memory``, ``rb_depth`` or ``t_heavy``.
        depth: number of random transversal Clifford layers ``D``.
        t_density: fraction of extra T-gate noise layers, ``ceil(t_density * D)``.
    """

    kind: str = "memory"
    depth: int = 0
    t_density: float = 0.0

    def __post_init__(self):
        if self.kind not in WORKLOADS:
            raise ValueError(f"unknown workload {self.kind!r}; expected one of {WORKLOADS}")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if not 0.0 <= self.t_density <= 1.0:
            raise ValueError("t_density must lie in [0, 1]")

    @property
    def t_layers(self) -> int:
        return math.ceil(self.t_density * self.depth) if self.kind == "t_heavy" else 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a Monte-Carlo result.

    Attributes:
        code: code name (``steane`` or ``repetition``).
        scheduler: extraction schedule.
        noise: noise model.
        shots: number of shots.
        workload: memory or workload description.
        seed: master seed.
        threads: worker threads (does not change results).
    """

    code: str = "steane"
    scheduler: SchedulerConfig = field(default_factory=lambda: SchedulerConfig(rounds=10))
    noise: NoiseModel = field(default_factory=NoiseModel)
    shots: int = 10_000
    workload: Workload = field(default_factory=Workload)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")

    def to_json(self) -> dict:
        """Resolved configuration (``threads`` is omitted: it never changes results)."""
        return {
            "code": self.code,
            "scheduler": self.scheduler.to_json(),
            "noise": self.noise.to_json(),
            "shots": self.shots,
            "workload": asdict(self.workload),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> ExperimentConfig:
        """Parse a config; ``noise`` may be a full model or ``{"p_phys": p, "channels": [...]}``."""
        known = {"code", "scheduler", "noise", "shots", "workload", "seed", "threads", "p_phys"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        noise_d = dict(d.get("noise", {}))
        if "p_phys" in d:
            noise_d.setdefault("p_phys", d["p_phys"])
        noise = _noise_from_json(noise_d)
        return cls(
            code=d.get("code", "steane"),
            scheduler=SchedulerConfig.from_json(d.get("scheduler", {"rounds": 10})),
            noise=noise,
            shots=int(d.get("shots", 10_000)),
            workload=Workload(**d.get("workload", {})),
            seed=int(d.get("seed", 0)),
            threads=int(d.get("threads", 1)),
        )


def _noise_from_json(d: dict) -> NoiseModel:
    if set(d) <= {"p_phys", "channels"} and "p_phys" in d:
        m = NoiseModel.from_pphys(float(d["p_phys"]))
        return m.with_channels(d["channels"]) if "channels" in d else m
    return NoiseModel.from_json(d) if d else NoiseModel()


@dataclass(frozen=True)
class BenchResult:
    """Aggregated outcome of one experiment.

    ``p_log`` is failures per shot per round; ``fail_prob`` is per shot.
    Ancilla-preparation and syndrome statistics are ``None`` when the
    scheduler has no verified preparation.
    """

    p_phys: float
    p_log: float
    fail_prob: float
    shots: int
    rounds: int
    failures: int
    n_data: int
    n_anc: int
    n_total: int
    width: int
    depth: int
    ci_low: float
    ci_high: float
    syndrome_fidelity: float
    prep_success_rate: float | None
    verification_failures: int | None
    wall_time_s: float

    def to_json(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time_s")
        return d


@dataclass(frozen=True)
class ThresholdPoint:
    """One point of a threshold curve; ``source`` is ``monte_carlo`` or ``analytic_model``."""

    d: int
    p_phys: float
    p_log: float
    ci_low: float
    ci_high: float
    source: str

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError("d must be odd and at least 3")
        if self.source not in ("monte_carlo", "analytic_model"):
            raise ValueError(f"unknown source {self.source!r}")


# statistics -------------------------------------------------------------------------------

def estimate_rate(failures: int, trials: int, z: float = 1.959963984540054) -> dict:
    """Point estimate with a Wilson score interval (95% by default).

    Raises:
        ValueError: ``trials < 1`` or ``failures`` outside ``[0, trials]``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    phat = failures / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return {"rate": phat, "ci_low": lo, "ci_high": hi}


def _syndrome_fidelity(code: CssCode, circuit: Circuit, res, rounds: int) -> float:
    match = 0
    for k in range(rounds):
        fx, fz = res.snapshots[f"r{k}"]
        truth = np.concatenate([
            (code.hz.astype(np.int64) @ fx) % 2,
            (code.hx.astype(np.int64) @ fz) % 2,
        ]).astype(bool)
        meas = res.clbits[circuit.register(f"syn_r{k}")]
        match += int(np.all(meas == truth, axis=0).sum())
    return match / (rounds * res.clbits.shape[1])


# experiments ------------------------------------------------------------------------------

_OBS_MAP = {"H": {"X": "Z", "Z": "X", "Y": "Y"}, "S": {"X": "Y", "Y": "X", "Z": "Z"}}


def _layers(config: ExperimentConfig) -> tuple[dict[int, list[str]], str]:
    """Random layer placement and the logical observable tracked to the end."""
    w = config.workload
    if w.kind == "memory" or w.depth == 0:
        return {}, "Z"
    rng = np.random.default_rng([config.seed, 0x5EED])
    gates = [LAYER_GATES[i] for i in rng.integers(0, len(LAYER_GATES), w.depth)]
    seq = list(gates)
    for pos in sorted(rng.choice(w.depth + w.t_layers, w.t_layers, replace=False)):
        seq.insert(int(pos), "T")
    rounds = config.scheduler.rounds
    out: dict[int, list[str]] = {}
    for i, layer in enumerate(seq):
        out.setdefault(i * rounds // len(seq), []).append(layer)
    obs = "Z"
    for layer in seq:
        obs = _OBS_MAP.get(layer, {}).get(obs, obs)
    return out, obs


def build_experiment_circuit(config: ExperimentConfig) -> tuple[Circuit, str]:
    """The instrumented circuit of an experiment and its final logical observable."""
    code = get_code(config.code)
    inter, obs = _layers(config)
    return memory_circuit(code, config.scheduler, config.noise, inter or None), obs


def _execute(config: ExperimentConfig) -> BenchResult:
    t0 = time.perf_counter()
    code = get_code(config.code)
    circ, obs = build_experiment_circuit(config)
    rounds = config.scheduler.rounds
    data = list(range(code.n))
    sim = FrameSimulator(circ, config.noise.t1_us, config.noise.t2_us)
    res = sim.sample(config.shots, config.seed, threads=config.threads,
                     snapshot_labels=[f"r{k}" for k in range(rounds)], snapshot_qubits=data)
    ex, ez = res.fx[data].copy(), res.fz[data].copy()
    if config.scheduler.recovery == "frame":
        ex ^= res.clbits[circ.register("frame_x")]
        ez ^= res.clbits[circ.register("frame_z")]
    failures = int(logical_flips(code, ex, ez, obs).sum())
    ci = estimate_rate(failures, config.shots)
    scale = 1.0 / rounds
    stats = circuit_stats(circ)
    _, a, b = circ.registers["anc"]
    prep = prep_statistics(circ, res.clbits)
    return BenchResult(
        p_phys=config.noise.p_phys,
        p_log=ci["rate"] * scale,
        fail_prob=ci["rate"],
        shots=config.shots,
        rounds=rounds,
        failures=failures,
        n_data=code.n,
        n_anc=b - a,
        n_total=circ.n_qubits,
        width=stats["width"],
        depth=stats["depth"],
        ci_low=ci["ci_low"] * scale,
        ci_high=ci["ci_high"] * scale,
        syndrome_fidelity=_syndrome_fidelity(code, circ, res, rounds),
        prep_success_rate=None if prep is None else prep["prep_success_rate"],
        verification_failures=None if prep is None else prep["verification_failures"],
        wall_time_s=round(time.perf_counter() - t0, 3),
    )


def run_memory(config: ExperimentConfig) -> BenchResult:
    """Logical memory: encode ``|0_L>``, run the rounds, count logical Z flips."""
    if config.workload.kind != "memory" and config.workload.depth:
        raise ValueError("run_memory expects a memory workload; use run_workload")
    return _execute(config)


def run_workload(config: ExperimentConfig) -> BenchResult:
    """Memory with random transversal Clifford layers and optional T-noise layers.

    ``rb_depth`` interleaves ``D`` layers drawn from ``X``, ``Z``, ``H`` and
    ``S`` between the rounds; ``t_heavy`` adds ``ceil(t_density * D)``
    single-qubit noise layers standing in for T gates.  The logical
    observable is carried through the layers so failures are counted against
    the right operator.
    """
    return _execute(config)


# threshold curves ------------------------------------------------------------------------

def analytic_p_log(d: int, p: float, a: float = A_MODEL, p_th: float = P_TH) -> float:
    """Model curve ``a * (p / p_th) ** ((d + 1) / 2)``."""
    if d < 1 or d % 2 == 0:
        raise ValueError("d must be a positive odd integer")
    return a * (p / p_th) ** ((d + 1) // 2)


def sweep_threshold(code: str, d_list, p_list, shots: int, *, scheduler: SchedulerConfig | None = None,
                    channels=CHANNELS, seed: int = 0, threads: int = 1) -> list[ThresholdPoint]:
    """Threshold curve points: Monte Carlo for ``d = 3``, the analytic model otherwise.

    Args:
        code: name of the distance-3 code simulated for ``d = 3``.
        d_list: odd distances.
        p_list: ascending physical error rates.
        shots: shots per Monte-Carlo point.
        scheduler: schedule for the Monte-Carlo points (default: steane mode,
            10 rounds).
        channels: enabled noise channels for the Monte-Carlo points.
        seed: master seed; point ``i`` uses ``seed + i``.
        threads: worker threads.
    """
    p_list = [float(p) for p in p_list]
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ValueError("p_list must be strictly ascending")
    scheduler = scheduler or SchedulerConfig(mode="steane", rounds=10, confirm=True)
    out = []
    for d in d_list:
        for i, p in enumerate(p_list):
            if d == 3:
                cfg = ExperimentConfig(code=code, scheduler=scheduler,
                                       noise=NoiseModel.from_pphys(p).with_channels(channels),
                                       shots=shots, seed=seed + i, threads=threads)
                r = run_memory(cfg)
                out.append(ThresholdPoint(3, p, r.p_log, r.ci_low, r.ci_high, "monte_carlo"))
            else:
                v = analytic_p_log(d, p)
                out.append(ThresholdPoint(d, p, v, v, v, "analytic_model"))
    return out


def crossing_point(points: list[ThresholdPoint]) -> dict | None:
    """Where a curve crosses ``p_log = p_phys``.

    The bracket is the pair of neighbouring points between which the ratio
    ``p_log / p_phys`` changes side of 1; the point estimate interpolates
    ``log(p_log / p_phys)`` linearly in ``log p``.  ``ci_bracket`` widens the
    bracket to every point whose interval does not exclude the diagonal.

    Returns:
        ``{"p_cross", "bracket", "ci_bracket"}`` or ``None`` when the curve
        stays on one side.
    """
    pts = sorted(points, key=lambda t: t.p_phys)
    lr = [math.log(max(t.p_log, 1e-300) / t.p_phys) for t in pts]
    for i in range(len(pts) - 1):
        if (lr[i] < 0) != (lr[i + 1] < 0):
            a, b = pts[i], pts[i + 1]
            frac = lr[i] / (lr[i] - lr[i + 1])
            lp = math.log(a.p_phys) + frac * (math.log(b.p_phys) - math.log(a.p_phys))
            amb = [t.p_phys for t in pts if t.ci_low <= t.p_phys <= t.ci_high]
            lo = min([a.p_phys] + amb)
            hi = max([b.p_phys] + amb)
            return {"p_cross": math.exp(lp), "bracket": [a.p_phys, b.p_phys], "ci_bracket": [lo, hi]}
    return None


def loglog_slope(points: list[ThresholdPoint], pmin: float, pmax: float) -> float:
    """Least-squares slope of ``log p_log`` against ``log p`` over ``[pmin, pmax]``."""
    sel = [t for t in points if pmin * (1 - 1e-9) <= t.p_phys <= pmax * (1 + 1e-9) and t.p_log > 0]
    if len(sel) < 2:
        raise ValueError("need at least two points with nonzero p_log in range")
    x = np.log([t.p_phys for t in sel])
    y = np.log([t.p_log for t in sel])
    return float(np.polyfit(x, y, 1)[0])


# method comparison ------------------------------------------------------------------------

def method_comparison_report(p_phys: float, shots: int, *, rounds: int = 10, seed: int = 0,
                             channels=CHANNELS, verify: int = 2, confirm: bool = True,
                             threads: int = 1) -> dict:
    """Run the three extraction modes at one noise level and tabulate them.

    Columns: syndrome fidelity (fraction of rounds whose accepted syndrome
    equals the syndrome of the data error present at the start of the
    round), preparation success rate, ancilla count and its ratio to
    standard, depth of one round and its ratio to standard, ``p_log`` with
    interval, and suppression ``p_phys / p_log``.
    """
    code = get_code("steane")
    noise = NoiseModel.from_pphys(p_phys).with_channels(channels)
    rows = []
    base = None
    for mode in ("standard", "cat", "steane"):
        sched = SchedulerConfig(mode=mode, rounds=rounds, verify=verify, confirm=confirm)
        r = run_memory(ExperimentConfig("steane", sched, noise, shots, seed=seed, threads=threads))
        one = circuit_stats(instrument(schedule_cycle(code, SchedulerConfig(mode=mode, verify=verify)),
                                       noise))
        if base is None:
            base = (r.n_anc, one["depth"])
        rows.append({
            "mode": mode,
            "syndrome_fidelity": r.syndrome_fidelity,
            "prep_success_rate": r.prep_success_rate,
            "n_anc": r.n_anc,
            "ancilla_ratio": r.n_anc / base[0],
            "round_depth": one["depth"],
            "depth_ratio": one["depth"] / base[1],
            "p_log": r.p_log,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "suppression": (p_phys / r.p_log) if r.p_log > 0 else math.inf,
            "failures": r.failures,
        })
    return {
        "p_phys": p_phys,
        "shots": shots,
        "rounds": rounds,
        "channels": sorted(channels),
        "syndrome_fidelity_definition": "accepted round syndrome equals the syndrome of the data error at round start",
        "rows": rows,
    }


def cat_verification_rate(p_phys: float, shots: int, *, w: int = 4, v: int = 2, seed: int = 0,
                          channels=CHANNELS) -> dict:
    """How often an accepted cat state carries a spreading error.

    A cat state is prepared and verified (as in cat-mode extraction) under
    noise; right before it would touch the data, the X-type error on the
    ``w`` core ancillas is inspected.  Up to the cat's own symmetry
    (flipping all ``w`` qubits), an error of weight ``>= 2`` would reach
    several data qubits.  Returns the acceptance rate and the bad-but-accepted
    rate conditioned on acceptance.
    """
    from .builders import _cat_attempt, _Prog  # shared with the scheduler

    c = Circuit(0)
    core = c.add_qubits(w, "core")
    ver = c.add_qubits(v, "ver")
    p = _Prog(c)
    bits = _cat_attempt(p, core, ver)
    c.append("TICK", arg="ready")
    c.registers["ver_bits"] = ("c", bits[0], bits[-1] + 1)
    noise = NoiseModel.from_pphys(p_phys).with_channels(channels)
    ci = instrument(c, noise)
    res = FrameSimulator(ci, noise.t1_us, noise.t2_us).sample(
        shots, seed, snapshot_labels=["ready"], snapshot_qubits=core)
    fx = res.snapshots["ready"][0]
    wt = fx.sum(axis=0)
    bad = np.minimum(wt, w - wt) >= 2
    ok = ~res.clbits[ci.register("ver_bits")].any(axis=0)
    n_ok = int(ok.sum())
    est = estimate_rate(int((bad & ok).sum()), max(n_ok, 1))
    return {"p_phys": p_phys, "shots": shots, "accepted": n_ok, "acceptance_rate": n_ok / shots,
            "bad_accepted": int((bad & ok).sum()), "rate": est["rate"],
            "ci_low": est["ci_low"], "ci_high": est["ci_high"]}


# output -------------------------------------------------------------------------------------

def envelope(kind: str, config: dict, seed: int | None, payload) -> dict:
    """Provenance wrapper written around every result."""
    return {"schema_version": SCHEMA_VERSION, "tool": "hft", "version": __version__, "kind": kind,
            "seed": seed, "config": config, "results": payload}


def to_json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def to_csv_text(rows: list[dict], columns: list[str], meta: dict | None = None) -> str:
    """CSV with optional ``# key=value`` provenance lines before the header."""
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={json.dumps(v, sort_keys=True)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow(["" if r.get(c) is None else _csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return v


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".hft-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
