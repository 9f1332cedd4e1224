"""Regenerate the bundled GDP fixtures from offline public datasets.

quarterly: US real GDP per capita, 1947Q1-2009Q3.
  1959Q1-2009Q3  statsmodels `macrodata` (realgdp, billions of chained 2005 USD;
                 pop, millions) -> realgdp / pop.
  1947Q1-1958Q4  backcast with the quarter-on-quarter growth of AER `USMacroSWQ`
                 real GDP (chained 2000 USD) divided by population interpolated
                 log-linearly from the annual Ecdat `USGDPpresidents` series.
annual:    Ecdat `USGDPpresidents` realGDPperCapita (MeasuringWorth), 1800-2010.

Requires: statsmodels, numpy, and the `rdatasets` wheel on sys.path
(pip download --no-deps rdatasets; python -m zipfile -e <wheel> <dir>).
Usage: python3 tools/build_fixtures.py <rdatasets-dir> <out-dir>
"""
import sys

import numpy as np
import statsmodels.api as sm

sys.path.insert(0, sys.argv[1])
import rdatasets  # noqa: E402

out = sys.argv[2]

pres = rdatasets.data("Ecdat", "USGDPpresidents")
annual = pres[(pres.Year >= 1800) & (pres.Year <= 2010)]
with open(f"{out}/us_gdp_pc_annual.csv", "w") as f:
    f.write("date,value\n")
    for y, v in zip(annual.Year, annual.realGDPperCapita):
        f.write(f"{int(y)},{v:.2f}\n")

macro = sm.datasets.macrodata.load_pandas().data
recent = [(int(y), int(q), g * 1e9 / (p * 1e6)) for y, q, g, p in zip(macro.year, macro.quarter, macro.realgdp, macro["pop"])]

swq = rdatasets.data("AER", "USMacroSWQ").gdp.to_numpy()  # 1947Q1..2004Q4
pop_years = pres.Year.to_numpy(dtype=float) + 0.5  # mid-year estimates
log_pop = np.log(pres["population.K"].to_numpy(dtype=float))


def pop_at(t):
    return np.exp(np.interp(t, pop_years, log_pop))


anchor_idx = (1959 - 1947) * 4
anchor_pc = recent[0][2]
early = []
for i in range(anchor_idx):
    y, q = 1947 + i // 4, i % 4 + 1
    t = y + (q - 1) * 0.25 + 0.125
    ratio = (swq[i] / swq[anchor_idx]) / (pop_at(t) / pop_at(1959.125))
    early.append((y, q, anchor_pc * ratio))

with open(f"{out}/us_gdp_pc_quarterly.csv", "w") as f:
    f.write("date,value\n")
    for y, q, v in early + recent:
        f.write(f"{y}Q{q},{v:.2f}\n")
