"""Compare the three extraction methods under the same noise budget.

Prints ancilla overhead, round depth, syndrome fidelity and the logical
error rate per round.  Raise ``SHOTS`` for tighter intervals.

    python3 demos/02_compare_methods.py
"""
from hft.bench import method_comparison_report

SHOTS = 5_000
P_PHYS = 3e-4

rep = method_comparison_report(P_PHYS, SHOTS, rounds=5, channels=("gate1", "gate2", "meas"))
print(f"p_phys={rep['p_phys']}  shots={rep['shots']}  rounds={rep['rounds']}")
print(f"syndrome fidelity: {rep['syndrome_fidelity_definition']}\n")
print(f"{'mode':>9} {'n_anc':>6} {'depth':>6} {'fidelity':>9} {'p_log':>10}  95% interval")
for r in rep["rows"]:
    print(f"{r['mode']:>9} {r['n_anc']:>6} {r['round_depth']:>6} {r['syndrome_fidelity']:>9.4f} "
          f"{r['p_log']:>10.2e}  [{r['ci_low']:.2e}, {r['ci_high']:.2e}]")
