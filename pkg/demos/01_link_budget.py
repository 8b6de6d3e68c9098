"""How much bandwidth does a THz VR link need?

Walks through the link budget at 1 THz, then shows how the delay
reliability of a session with a guaranteed line of sight improves as the
bandwidth grows.
"""

from thzvr.analysis import guaranteed_report, link
from thzvr.config import load_preset

cfg = load_preset("table2_1thz")
lk = link(cfg)
print(f"carrier {cfg.frequency / 1e12:g} THz, user at {cfg.link_distance:g} m")
print(f"mean interference {lk.mu_I:.3e} W, std {lk.sigma_I:.3e} W")
print(f"LoS rate at {cfg.bandwidth / 1e9:g} GHz: {lk.rate_los / 1e9:.2f} Gbit/s\n")

deltas = (0.005, 0.010, 0.020)
print("bandwidth  rate      " + "  ".join(f"P(delay<={d * 1e3:g}ms)" for d in deltas))
for w in (5e9, 10e9, 15e9, 20e9, 30e9):
    rep = guaranteed_report(cfg.with_(bandwidth=w), deltas)
    cells = "  ".join(f"{rep.reliability(d):>15.6f}" for d in deltas)
    print(f"{w / 1e9:>6g} GHz {rep.rate_los / 1e9:6.2f} Gb/s {cells}")
