"""Walk through one round of Steane-code error correction by hand.

Encode |0_L>, put a bit flip on qubit 5, extract the syndrome with each of
the three methods and decode it.

    python3 demos/01_correct_one_error.py
"""
from hft.builders import run_extraction
from hft.codes import format_steane, steane_code, syndrome_of
from hft.pauli import PauliString

code = steane_code()
print(format_steane(code))

error = PauliString.single(7, 4, "X")  # qubits are 0-based, so this is X on qubit 5
syn = syndrome_of(code, error)
print(f"\nerror {error}  ->  Z-syndrome {syn.z_bits}, X-syndrome {syn.x_bits}")
fix = code.decode(syn)
print(f"lookup decoder proposes {fix}; residual is a stabilizer: {code.in_stabilizer_group(fix * error)}")

for mode in ("standard", "cat", "steane"):
    out = run_extraction(code, mode, error=error, seed=1)
    print(f"{mode:>8}: measured {out.syndrome.bits}  accepted {out.accepted}  attempts {out.attempts_used}")
