"""Time-series decoding of repeated syndrome measurements.

Each stabilizer bit is treated as its own two-state hidden Markov chain: the
hidden bit toggles between rounds with probability ``q_flip`` and every
observation misreports it with probability ``r_obs``.  Three decoders are
offered:

* :func:`majority_vote` over a sliding window,
* :func:`viterbi_decode`, the most likely hidden path (log space),
* :func:`bayes_filter`, forward filtering with a posterior per round.

Streams are ``T x S`` bit matrices; because chains are independent, many
shots can be decoded at once by stacking them along the second axis
(:meth:`SyndromeStream.stack`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

METHODS = ("majority", "viterbi", "bayes")
_TIE = 1e-9  # log-likelihood differences below this count as ties

__all__ = [
    "METHODS", "SyndromeStream", "HmmParams", "TemporalDecision", "majority_vote",
    "viterbi_decode", "bayes_filter", "bayes_posterior", "decode", "simulate_streams",
    "streams_from_circuit", "fit_default_params", "compare_methods", "adaptive_readout",
    "accept",
]


@dataclass(frozen=True)
class SyndromeStream:
    """Observed syndrome bits, one row per round and one column per stabilizer.

    Attributes:
        observations: ``(T, S)`` bits.
        hidden_truth: optional ``(T, S)`` bits of the true syndrome (evaluation only).
    """

    observations: np.ndarray
    hidden_truth: np.ndarray | None = None

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observations, dtype=np.uint8))
        if obs.ndim != 2:
            raise ValueError("observations must be a T x S matrix")
        if np.any(obs > 1):
            raise ValueError("observations must be bits")
        object.__setattr__(self, "observations", obs)
        if self.hidden_truth is not None:
            ht = np.atleast_2d(np.asarray(self.hidden_truth, dtype=np.uint8))
            if ht.shape != obs.shape:
                raise ValueError(f"hidden_truth shape {ht.shape} != observations {obs.shape}")
            object.__setattr__(self, "hidden_truth", ht)

    @property
    def rounds(self) -> int:
        return self.observations.shape[0]

    @property
    def n_stabilizers(self) -> int:
        return self.observations.shape[1]

    @classmethod
    def stack(cls, streams) -> SyndromeStream:
        """Concatenate equal-length streams along the stabilizer axis."""
        streams = list(streams)
        truth = None
        if all(s.hidden_truth is not None for s in streams):
            truth = np.concatenate([s.hidden_truth for s in streams], axis=1)
        return cls(np.concatenate([s.observations for s in streams], axis=1), truth)


@dataclass(frozen=True)
class HmmParams:
    """Two-state chain parameters.

    Attributes:
        q_flip: per-round probability that the hidden bit toggles.
        r_obs: probability that an observation misreports the hidden bit.
        prior0: probability that the hidden bit starts at 0.
    """

    q_flip: float = 0.05
    r_obs: float = 0.1
    prior0: float = 0.5

    def __post_init__(self):
        for name in ("q_flip", "r_obs", "prior0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def to_json(self) -> dict:
        return {"q_flip": self.q_flip, "r_obs": self.r_obs, "prior0": self.prior0}


@dataclass(frozen=True)
class TemporalDecision:
    """Per-round decoded bits with confidences.

    Attributes:
        corrected_bits: ``(T, S)`` decoded bits.
        confidence: ``(T, S)`` values in ``[0, 1]``.
        method: decoder name.
    """

    corrected_bits: np.ndarray
    confidence: np.ndarray
    method: str

    @property
    def final_bits(self) -> np.ndarray:
        return self.corrected_bits[-1]

    @property
    def final_confidence(self) -> np.ndarray:
        return self.confidence[-1]


def _check(stream: SyndromeStream) -> np.ndarray:
    if stream.rounds == 0 or stream.n_stabilizers == 0:
        raise ValueError("empty stream")
    return stream.observations


# majority ---------------------------------------------------------------------------------

def majority_vote(stream: SyndromeStream, window: int = 3) -> TemporalDecision:
    """Sliding-window majority.

    At round ``t`` the bit is the majority of the last ``min(window, t + 1)``
    observations and the confidence is the fraction of them agreeing with it.
    An even split keeps the previously reported bit (0 at round 0).

    Raises:
        ValueError: empty stream or ``window < 1``.
    """
    obs = _check(stream).astype(np.int64)
    if window < 1:
        raise ValueError("window must be at least 1")
    T, S = obs.shape
    csum = np.vstack([np.zeros((1, S), np.int64), np.cumsum(obs, axis=0)])
    bits = np.zeros((T, S), np.uint8)
    conf = np.zeros((T, S))
    prev = np.zeros(S, np.uint8)
    for t in range(T):
        n = min(window, t + 1)
        ones = csum[t + 1] - csum[t + 1 - n]
        b = np.where(2 * ones > n, 1, np.where(2 * ones < n, 0, prev)).astype(np.uint8)
        bits[t] = b
        conf[t] = np.where(b == 1, ones, n - ones) / n
        prev = b
    return TemporalDecision(bits, conf, "majority")


# Viterbi ----------------------------------------------------------------------------------

def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _logs(params: HmmParams):
    q, r, p0 = params.q_flip, params.r_obs, params.prior0
    trans = _log(np.array([[1 - q, q], [q, 1 - q]]))  # [from, to]
    emit = _log(np.array([[1 - r, r], [r, 1 - r]]))  # [state, obs]
    prior = _log(np.array([p0, 1 - p0]))
    return trans, emit, prior


def _logsumexp2(a, b):
    m = np.maximum(a, b)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        out = safe + np.log(np.exp(a - safe) + np.exp(b - safe))
    return np.where(np.isfinite(m), out, -np.inf)


def viterbi_decode(stream: SyndromeStream, params: HmmParams) -> TemporalDecision:
    """Most likely hidden path per stabilizer, computed in log space.

    Ties between equally likely choices go to state 0, both for the final
    state and for every back-pointer.  The confidence at round ``t`` is the
    best path score up to ``t`` divided by the total forward probability at
    ``t``, i.e. the posterior weight of the single best prefix.
    """
    obs = _check(stream)
    T, S = obs.shape
    trans, emit, prior = _logs(params)
    delta = np.empty((T, 2, S))
    alpha = np.empty((T, 2, S))
    back = np.zeros((T, 2, S), np.uint8)
    e0 = emit[0][obs]  # (T, S) log P(obs | state 0)
    e1 = emit[1][obs]
    delta[0, 0] = prior[0] + e0[0]
    delta[0, 1] = prior[1] + e1[0]
    alpha[0] = delta[0]
    for t in range(1, T):
        for s, e in ((0, e0[t]), (1, e1[t])):
            from0 = delta[t - 1, 0] + trans[0, s]
            from1 = delta[t - 1, 1] + trans[1, s]
            pick1 = from1 > from0 + _TIE
            back[t, s] = pick1
            delta[t, s] = np.where(pick1, from1, from0) + e
            alpha[t, s] = _logsumexp2(alpha[t - 1, 0] + trans[0, s], alpha[t - 1, 1] + trans[1, s]) + e
    path = np.zeros((T, S), np.uint8)
    path[-1] = delta[-1, 1] > delta[-1, 0] + _TIE
    cols = np.arange(S)
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t], cols]
    best = np.maximum(delta[:, 0], delta[:, 1])
    total = _logsumexp2(alpha[:, 0], alpha[:, 1])
    with np.errstate(invalid="ignore"):
        conf = np.exp(best - total)
    conf = np.clip(np.nan_to_num(conf, nan=0.0), 0.0, 1.0)
    return TemporalDecision(path, conf, "viterbi")


# Bayes filter -----------------------------------------------------------------------------

def bayes_posterior(stream: SyndromeStream, params: HmmParams) -> np.ndarray:
    """Filtered posteriors, shape ``(T, 2, S)``: ``P(state | observations up to t)``.

    Round 0 combines the prior with the first observation; later rounds first
    predict with ``q_flip`` and then update with the ``r_obs`` likelihood.  An
    observation with zero likelihood under both states leaves the prediction
    unchanged.
    """
    obs = _check(stream)
    T, S = obs.shape
    q, r = params.q_flip, params.r_obs
    post = np.empty((T, 2, S))
    belief = np.empty((2, S))
    belief[0] = params.prior0
    belief[1] = 1.0 - params.prior0
    for t in range(T):
        if t > 0:
            b1 = belief[1] * (1 - q) + belief[0] * q
            belief = np.stack([1.0 - b1, b1])
        o = obs[t]
        lik = np.stack([np.where(o == 0, 1 - r, r), np.where(o == 1, 1 - r, r)])
        u = belief * lik
        z = u.sum(axis=0)
        ok = z > 0
        belief = np.where(ok, u / np.where(ok, z, 1.0), belief)
        post[t] = belief
    return post


def bayes_filter(stream: SyndromeStream, params: HmmParams) -> TemporalDecision:
    """Forward filter; the bit is the posterior argmax (ties to 0), confidence its posterior."""
    post = bayes_posterior(stream, params)
    bits = (post[:, 1] > post[:, 0]).astype(np.uint8)
    conf = np.where(bits == 1, post[:, 1], post[:, 0])
    return TemporalDecision(bits, conf, "bayes")


def decode(stream: SyndromeStream, method: str, params: HmmParams | None = None,
           window: int = 3) -> TemporalDecision:
    """Dispatch to one of :data:`METHODS`."""
    if method == "majority":
        return majority_vote(stream, window)
    params = params or HmmParams()
    if method == "viterbi":
        return viterbi_decode(stream, params)
    if method == "bayes":
        return bayes_filter(stream, params)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


# adaptive acceptance ----------------------------------------------------------------------

def accept(decision: TemporalDecision, threshold: float = 0.95) -> bool:
    """Whether every bit of the latest round is decided with confidence above ``threshold``."""
    return bool(np.all(decision.final_confidence > threshold))


def adaptive_readout(next_round: Callable[[], np.ndarray], method: str = "bayes",
                     params: HmmParams | None = None, threshold: float = 0.95,
                     min_rounds: int = 1, max_rounds: int = 16, window: int = 3) -> dict:
    """Request syndrome rounds until the decoded syndrome is confident enough.

    Args:
        next_round: returns the next round's ``S`` observed bits.
        method: decoder used after each round.
        params: chain parameters for ``viterbi``/``bayes``.
        threshold: acceptance level for every bit's confidence.
        min_rounds: rounds always taken.
        max_rounds: give up (``accepted = False``) after this many.
        window: majority window.

    Returns:
        ``{"bits", "confidence", "rounds", "accepted"}``.
    """
    if not 1 <= min_rounds <= max_rounds:
        raise ValueError("need 1 <= min_rounds <= max_rounds")
    rows = []
    dec = None
    for n in range(1, max_rounds + 1):
        rows.append(np.asarray(next_round(), dtype=np.uint8))
        if n < min_rounds:
            continue
        dec = decode(SyndromeStream(np.array(rows)), method, params, window)
        if accept(dec, threshold):
            return {"bits": dec.final_bits, "confidence": dec.final_confidence, "rounds": n,
                    "accepted": True}
    return {"bits": dec.final_bits, "confidence": dec.final_confidence, "rounds": max_rounds,
            "accepted": False}


# stream sources ---------------------------------------------------------------------------

def simulate_streams(params: HmmParams, rounds: int, n_stabilizers: int, shots: int,
                     seed=None) -> list[SyndromeStream]:
    """Draw streams from the chain model itself (hidden truth included)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = n_stabilizers * shots
    start = rng.random(n) >= params.prior0
    toggles = rng.random((rounds, n)) < params.q_flip
    toggles[0] = False
    truth = (np.cumsum(toggles, axis=0) + start) % 2
    obs = truth ^ (rng.random((rounds, n)) < params.r_obs)
    return [SyndromeStream(obs[:, i * n_stabilizers:(i + 1) * n_stabilizers],
                           truth[:, i * n_stabilizers:(i + 1) * n_stabilizers])
            for i in range(shots)]


def streams_from_circuit(code, config, noise, shots: int, seed: int = 0,
                         stabilizer_type: str = "X") -> list[SyndromeStream]:
    """Syndrome streams of one stabilizer type from a noisy circuit run.

    No recovery is applied, so the hidden syndrome accumulates like the
    chain model assumes.  The truth at round ``t`` is the syndrome of the
    data error present when the round starts.
    """
    from dataclasses import replace

    from .builders import memory_circuit
    from .sim import FrameSimulator

    cfg = replace(config, recovery="none")
    circ = memory_circuit(code, cfg, noise)
    res = FrameSimulator(circ, noise.t1_us, noise.t2_us).sample(
        shots, seed, snapshot_labels=[f"r{k}" for k in range(cfg.rounds)],
        snapshot_qubits=list(range(code.n)))
    obs, truth = _stream_arrays(code, circ, res, cfg.rounds, stabilizer_type)
    S = obs.shape[1] // shots
    return [SyndromeStream(obs[:, i::shots][:, :S], truth[:, i::shots][:, :S]) for i in range(shots)]


def _stream_arrays(code, circ, res, rounds: int, stabilizer_type: str):
    nz = code.n_z_checks
    h = code.hx if stabilizer_type == "X" else code.hz
    sel = slice(nz, None) if stabilizer_type == "X" else slice(0, nz)
    obs_rows, truth_rows = [], []
    for k in range(rounds):
        fx, fz = res.snapshots[f"r{k}"]
        err = fz if stabilizer_type == "X" else fx
        truth_rows.append(((h.astype(np.int64) @ err) % 2).reshape(-1))
        obs_rows.append(res.clbits[circ.register(f"syn_r{k}")][sel].reshape(-1))
    # columns ordered stabilizer-major: column s * shots + i
    return np.array(obs_rows, np.uint8), np.array(truth_rows, np.uint8)


def _stream_calibration(code, config, noise, shots: int, seed: int, stabilizer_type: str) -> float:
    """Fraction of reported bits that differ from the true syndrome at round start."""
    from dataclasses import replace

    streams = streams_from_circuit(code, replace(config, rounds=1), noise, shots, seed,
                                   stabilizer_type)
    st = SyndromeStream.stack(streams)
    return float(np.mean(st.observations != st.hidden_truth))


def _relevant(stabilizer_type: str) -> set[str]:
    return {"Y", "Z"} if stabilizer_type == "X" else {"X", "Y"}


def fit_default_params(noise, round_stats: dict | None = None, *, code=None, config=None,
                       shots: int = 10_000, seed: int = 0, stabilizer_type: str = "X",
                       prior0: float = 1.0) -> HmmParams:
    """Chain parameters matched to a noise model.

    ``q_flip`` is the probability that the data errors picked up during one
    round flip a stabilizer, from the noise sites on data qubits of one
    instrumented round (averaged over stabilizers of ``stabilizer_type``).
    ``r_obs`` is the misreport rate measured by a calibration run: rounds of
    extraction on ``|0_L>`` without recovery, comparing each reported bit to
    the true syndrome at the start of the round.

    Args:
        noise: the noise model.
        round_stats: precomputed ``{"q_flip": ..., "r_obs": ...}`` entries
            that skip the corresponding estimate.
        code: defaults to the Steane code.
        config: scheduler used for both estimates (default: standard mode).
        shots: calibration shots.
        seed: calibration seed.
        stabilizer_type: ``X`` or ``Z`` stabilizers.
        prior0: prior of the hidden bit starting at 0.
    """
    from dataclasses import replace

    from .builders import SchedulerConfig, schedule_cycle
    from .codes import steane_code
    from .noise import instrument

    if noise.is_noiseless:
        return HmmParams(0.0, 0.0, prior0)
    code = code or steane_code()
    config = config or SchedulerConfig(mode="standard")
    stats = dict(round_stats or {})
    if "q_flip" not in stats:
        one = instrument(schedule_cycle(code, replace(config, rounds=1, recovery="none")), noise)
        stats["q_flip"] = _q_flip_from_sites(one, code, noise, stabilizer_type)
    if "r_obs" not in stats:
        stats["r_obs"] = _stream_calibration(code, config, noise, shots, seed, stabilizer_type)
    return HmmParams(float(stats["q_flip"]), float(stats["r_obs"]), prior0)


def _q_flip_from_sites(circ, code, noise, stabilizer_type: str) -> float:
    from .noise import idle_pauli_probs

    rel = _relevant(stabilizer_type)
    data = set(range(code.n))
    keep = sum(1 for letter in "XYZ" if letter in rel)
    flip = np.zeros(code.n)  # accumulated product of (1 - 2 p) per qubit
    flip[:] = 1.0
    for ins in circ.instructions:
        if ins.op == "NOISE1":
            for q in ins.qubits:
                if q in data:
                    flip[q] *= 1 - 2 * (ins.arg * keep / 3)
        elif ins.op == "NOISE2":
            for q in ins.qubits:
                if q in data:
                    flip[q] *= 1 - 2 * (ins.arg * 4 * keep / 15)
        elif ins.op == "IDLE":
            px, py, pz = idle_pauli_probs(ins.arg, noise.t1_us, noise.t2_us)
            pr = {"X": px, "Y": py, "Z": pz}
            for q in ins.qubits:
                if q in data:
                    flip[q] *= 1 - 2 * sum(pr[k] for k in rel)
    h = code.hx if stabilizer_type == "X" else code.hz
    qs = [(1 - np.prod(flip[np.flatnonzero(row)])) / 2 for row in h]
    return float(np.mean(qs))


# comparison -------------------------------------------------------------------------------

def compare_methods(streams, params: HmmParams | None = None, window: int = 3,
                    detail_shots: int = 5) -> dict:
    """Run all three decoders on streams with known truth and tabulate them.

    Per method: accuracy over all (round, stabilizer) entries, accuracy of
    the final round, mean confidence, and the number of rounds in which it
    disagreed with at least one other method.  The first ``detail_shots``
    shots are listed with their final corrected vectors and confidences, and
    every shot whose final vectors differ between methods is flagged.
    """
    if isinstance(streams, SyndromeStream):
        streams = [streams]
    streams = list(streams)
    if not streams or any(s.hidden_truth is None for s in streams):
        raise ValueError("compare_methods needs streams with hidden_truth")
    params = params or HmmParams()
    stacked = SyndromeStream.stack(streams)
    S = streams[0].n_stabilizers
    decs = {m: decode(stacked, m, params, window) for m in METHODS}
    truth = stacked.hidden_truth
    T, N = truth.shape
    n = len(streams)
    per_round = {m: d.corrected_bits.reshape(T, n, S) for m, d in decs.items()}
    disagree_any = np.zeros((T, n), bool)
    odd = {}
    for m in METHODS:
        others = [per_round[o] for o in METHODS if o != m]
        odd[m] = np.any([np.any(per_round[m] != o, axis=2) for o in others], axis=0)
        disagree_any |= odd[m]
    summary = {}
    for m, d in decs.items():
        summary[m] = {
            "accuracy": float(np.mean(d.corrected_bits == truth)),
            "final_accuracy": float(np.mean(d.corrected_bits[-1] == truth[-1])),
            "mean_confidence": float(np.mean(d.confidence)),
            "disagreement_rounds": int(odd[m].sum()),
        }
    shots = []
    flagged = []
    for i in range(n):
        finals = {m: per_round[m][-1, i] for m in METHODS}
        differs = any(not np.array_equal(finals[METHODS[0]], finals[m]) for m in METHODS[1:])
        if differs:
            flagged.append(i)
        if i < detail_shots:
            entry = {
                "shot": i,
                "hidden_truth": streams[i].hidden_truth[-1].tolist(),
                "observed": streams[i].observations.tolist(),
                "disagreement_rounds": np.flatnonzero(disagree_any[:, i]).tolist(),
                "final_disagreement": differs,
            }
            for m in METHODS:
                conf = decs[m].confidence.reshape(T, n, S)[-1, i]
                entry[m] = {"corrected": finals[m].tolist(), "confidence": [round(float(c), 6) for c in conf]}
            shots.append(entry)
    return {"params": params.to_json(), "window": window, "rounds": T, "n_streams": n,
            "methods": summary, "flagged_shots": flagged, "shots": shots}
