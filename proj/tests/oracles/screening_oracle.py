"""Writes tests/data/screening_fixture.csv and prints the expected screening
outcome, computed independently with numpy.

Run: python3 tests/oracles/screening_oracle.py
"""
import os

import numpy as np

rng = np.random.default_rng(2024)
n_img, n_regular = 30, 22
truth = rng.uniform(15, 85, n_img)
rows = {}
for i in range(n_regular):
    rows[f"s{i:02d}"] = np.clip(truth + rng.normal(0, 5, n_img), 0, 100)
# Alternates +-15 around the truth: many outliers on both sides.
rows["erratic"] = np.clip(truth + np.where(np.arange(n_img) % 2 == 0, 15.0, -15.0), 0, 100)
# Uniform random scores.
rows["spammer"] = rng.uniform(0, 100, n_img)
# Consistently harsh but rank-faithful.
rows["harsh"] = np.clip(truth - 12.0, 0, 100)
rows = {k: np.round(v, 1) for k, v in rows.items()}

names = list(rows)
M = np.array([rows[k] for k in names])

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "..", "data", "screening_fixture.csv"), "w") as f:
    f.write("subject_id," + ",".join(f"img{j:02d}" for j in range(n_img)) + "\n")
    for k in names:
        f.write(k + "," + ",".join(f"{v:g}" for v in rows[k]) + "\n")


def stage1(M):
    mean = M.mean(axis=0)
    sd = M.std(axis=0, ddof=1)
    m2 = ((M - mean) ** 2).mean(axis=0)
    m4 = ((M - mean) ** 4).mean(axis=0)
    kurt = m4 / m2**2
    thr = np.where((kurt >= 2) & (kurt <= 4), 2.0, np.sqrt(20.0)) * sd
    P = (M - mean > thr).sum(axis=1)
    Q = (mean - M > thr).sum(axis=1)
    frac = (P + Q) / M.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        asym = np.abs(P - Q) / (P + Q)
    reject = (P + Q > 0) & (frac > 0.05) & (asym < 0.3)
    return reject, frac, P, Q


def stage2(M):
    out = []
    total = M.sum(axis=0)
    for i in range(M.shape[0]):
        loo = (total - M[i]) / (M.shape[0] - 1)
        out.append(np.corrcoef(M[i], loo)[0, 1])
    return np.array(out)


r1, frac, P, Q = stage1(M)
for k, rej, f_, p, q in zip(names, r1, frac, P, Q):
    if rej:
        print(f"stage1 reject {k} frac={f_:.12g} P={p} Q={q}")
keep = [i for i in range(len(names)) if not r1[i]]
c = stage2(M[keep])
for i, ci in zip(keep, c):
    if ci < 0.7:
        print(f"stage2 reject {names[i]} corr={ci:.12g}")
print("harsh corr", c[[names[i] for i in keep].index("harsh")])
# Stage 2 alone on the full matrix, for the spammer.
c_all = stage2(M)
print(f"spammer stage2-only corr={c_all[names.index('spammer')]:.12g}")

# Second pass on the survivors of the first pass: removing the spammer
# lowers the kurtosis, the 2-sigma rule applies, and the erratic rater
# becomes a stage-1 outlier.
survivors = [i for i in keep if c[keep.index(i)] >= 0.7]
M2 = M[survivors]
r1b, frac_b, P_b, Q_b = stage1(M2)
for i, rej, f_, p, q in zip(survivors, r1b, frac_b, P_b, Q_b):
    if rej:
        print(f"second pass stage1 reject {names[i]} frac={f_:.12g} P={p} Q={q}")
