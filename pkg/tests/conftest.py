import numpy as np
import pytest

from hft.codes import steane_code
from hft.tableau import StabilizerTableau


@pytest.fixture(scope="session")
def steane():
    return steane_code()


def random_clifford(t: StabilizerTableau, rng: np.random.Generator, gates: int = 40) -> list:
    """Apply a random H/S/CX sequence to ``t`` and return it for replay."""
    ops = []
    for _ in range(gates):
        kind = rng.integers(3)
        if kind == 0:
            q = int(rng.integers(t.n))
            t.h(q)
            ops.append(("h", q))
        elif kind == 1:
            q = int(rng.integers(t.n))
            t.s(q)
            ops.append(("s", q))
        elif t.n > 1:
            a, b = (int(v) for v in rng.choice(t.n, 2, replace=False))
            t.cx(a, b)
            ops.append(("cx", a, b))
    return ops


def containment_residuals(mode: str, *, rounds: int = 1, recovery: str = "none", confirm: bool = True,
                          readout: str = "batched", verify: int = 2):
    """Exhaustive single-fault injection into the extraction cycle of ``mode``.

    Returns ``(faults, weights, flips)`` where ``weights`` is the
    stabilizer-reduced weight of the final data error of each shot and
    ``flips`` marks shots whose residual flips logical Z after a perfect
    decode.  With recovery ``frame`` the tracked correction is applied.
    """
    from hft.builders import SchedulerConfig, memory_circuit
    from hft.codes import logical_flips, reduced_weight, steane_code
    from hft.noise import NoiseModel
    from hft.sim import FrameSimulator, fault_locations

    code = steane_code()
    cfg = SchedulerConfig(mode, readout, rounds, verify=verify, recovery=recovery, confirm=confirm)
    circ = memory_circuit(code, cfg, NoiseModel())
    faults = fault_locations(circ)
    res = FrameSimulator(circ).inject(faults)
    data = circ.register("data")
    ex, ez = res.fx[data], res.fz[data]
    if recovery == "frame":
        ex = ex ^ res.clbits[circ.register("frame_x")]
        ez = ez ^ res.clbits[circ.register("frame_z")]
    weights = reduced_weight(code, ex, ez)
    flips = logical_flips(code, ex, ez, "Z") | logical_flips(code, ex, ez, "X")
    return faults, weights, flips
