"""Writes the synthetic stand-in traces used by configs/two_class.json.

The real monthly CAISO price averages and the NREL wind samples are not
redistributable, so these files only imitate their shape: an evening price
peak, real-time prices that sometimes fall below day-ahead, and a diurnal
wind profile capped at 3 (300 MW).
"""
import math
import pathlib
import random

HERE = pathlib.Path(__file__).parent
T = 24
rng = random.Random(2010)

for month in range(1, 13):
    level = 3.2 + 0.9 * math.sin(2 * math.pi * (month - 3) / 12) + rng.uniform(-0.2, 0.2)
    rows = ["hour,dayahead,realtime"]
    for h in range(T):
        shape = 1.0 + 0.35 * math.exp(-((h - 17) ** 2) / 8.0) - 0.2 * math.exp(-((h - 4) ** 2) / 6.0)
        beta = level * shape * rng.uniform(0.95, 1.05)
        alpha = beta * rng.uniform(0.85, 1.6)
        if h == 18 and month == 7:
            alpha = 11.4  # the one spike that sets alpha_max
        rows.append(f"{h},{beta:.4f},{min(alpha, 11.4):.4f}")
    (HERE / f"prices_{month:02d}.csv").write_text("\n".join(rows) + "\n")

rows = ["day,hour,power_100mw"]
for d in range(365):
    season = 1.0 + 0.3 * math.cos(2 * math.pi * (d - 150) / 365)
    for h in range(T):
        diurnal = 1.0 + 0.4 * math.sin(2 * math.pi * (h - 14) / 24)
        v = 1.1 * season * diurnal * rng.weibullvariate(1.0, 2.0)
        rows.append(f"{d},{h},{min(max(v, 0.0), 3.0):.3f}")
(HERE / "wind.csv").write_text("\n".join(rows) + "\n")
