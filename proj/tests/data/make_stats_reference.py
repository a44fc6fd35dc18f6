"""Regenerates stats_reference.json from scipy / sklearn / statsmodels.

The C++ tests read the frozen file; rerun only when the fixture set changes.
"""
import json
import random

import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score
from statsmodels.stats.inter_rater import fleiss_kappa

rng = random.Random(20240607)
paired = []
for i in range(100):
    n = rng.randint(2, 60)
    decimals = 1 if i % 3 == 0 else 4
    x = [round(rng.uniform(0, 3), decimals) for _ in range(n)]
    shift = rng.uniform(-0.5, 0.5)
    y = [round(min(3.0, max(0.0, v - shift + rng.gauss(0, 0.6))), decimals) for v in x]
    d = np.array(x) - np.array(y)
    if np.std(d, ddof=1) == 0:
        continue
    t = stats.ttest_rel(x, y)
    row = {"x": x, "y": y, "t": float(t.statistic), "p_t": float(t.pvalue),
           "dz": float(np.mean(d) / np.std(d, ddof=1))}
    nz = d[d != 0]
    ties = len(np.unique(np.abs(nz))) != len(nz)
    if len(nz) == 0:
        row["p_w"] = 1.0
    elif len(nz) <= 25 and not ties:
        row["p_w"] = float(stats.wilcoxon(x, y, zero_method="wilcox", method="exact").pvalue)
    elif len(nz) > 25:
        row["p_w"] = float(stats.wilcoxon(x, y, zero_method="wilcox", correction=False,
                                          method="approx").pvalue)
    paired.append(row)

cohen = []
while len(cohen) < 100:
    n = rng.randint(5, 80)
    a = [rng.randint(0, 3) for _ in range(n)]
    b = [v if rng.random() < 0.6 else rng.randint(0, 3) for v in a]
    k = cohen_kappa_score(a, b, labels=[0, 1, 2, 3])
    if np.isnan(k):
        continue
    cohen.append({"a": a, "b": b, "kappa": float(k)})

fleiss = []
while len(fleiss) < 100:
    items = rng.randint(3, 60)
    raters = rng.randint(2, 6)
    table = []
    for _ in range(items):
        base = rng.randint(0, 3)
        counts = [0, 0, 0, 0]
        for _ in range(raters):
            counts[base if rng.random() < 0.5 else rng.randint(0, 3)] += 1
        table.append(counts)
    k = fleiss_kappa(np.array(table), method="fleiss")
    if np.isnan(k):
        continue
    fleiss.append({"table": table, "kappa": float(k)})

worked = {"diffs": [1, 2, 3], "p_t": float(stats.ttest_1samp([1, 2, 3], 0).pvalue),
          "p_w": float(stats.wilcoxon([1, 2, 3], method="exact").pvalue)}

with open("stats_reference.json", "w") as f:
    json.dump({"paired": paired, "cohen": cohen, "fleiss": fleiss, "worked": worked}, f)
print(len(paired), sum("p_w" in r for r in paired), len(cohen), len(fleiss), worked)
