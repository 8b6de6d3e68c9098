"""Design knobs: distance to the base station and interference radius.

Reliability at a 5 ms budget falls as the interference radius grows, and
it falls faster when the user sits farther from the serving station.
"""

from thzvr.analysis import guaranteed_report
from thzvr.config import load_preset
from thzvr.errors import ConfigError

cfg = load_preset("table2_1thz")
radii = (2.0, 4.0, 6.5, 8.0, 10.0)
print("r0 \\ Omega " + "".join(f"{r:>10g}" for r in radii))
for r0 in (1.0, 1.5, 2.0, 3.0):
    row = []
    for om in radii:
        try:
            c = cfg.with_(link_distance=r0, interference_radius=om).validate()
            row.append(f"{guaranteed_report(c, (0.005,)).reliability(0.005):10.4f}")
        except ConfigError:
            row.append(f"{'n/a':>10}")
    print(f"{r0:>10g} " + "".join(row))

print("\nabsorption coefficient K (1/m) vs mean delay and P(delay <= 5 ms)")
for k in (0.0, 0.0016, 0.05, 0.2):
    rep = guaranteed_report(cfg.with_(absorption=k), (0.005,))
    print(f"  K={k:<7g} mean {rep.cdf.mean() * 1e3:6.3f} ms  reliability {rep.reliability(0.005):.4f}")
