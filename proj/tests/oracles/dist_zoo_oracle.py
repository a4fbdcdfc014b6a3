"""Reference values for the classical-distribution tests, computed with scipy.

Run: python3 tests/oracles/dist_zoo_oracle.py
The printed numbers are frozen into tests/dist_zoo_test.cpp.
"""
import numpy as np
from scipy import stats
from scipy.optimize import brentq

# Fixed score sample shared with the C++ test.
SCORES = np.array([62, 55, 71, 48, 66, 59, 80, 52, 63, 57, 69, 45, 74, 61, 58,
                   67, 50, 64, 72, 56, 60, 53, 77, 65, 49, 68, 62, 70, 54, 63],
                  dtype=float)

edges = np.arange(0, 101, 10, dtype=float)
cdf = -np.expm1(-0.05 * edges)
m = np.diff(cdf)
m /= m.sum()
print("exponential(0.05) densities:", ", ".join(f"{v:.17g}" for v in m / 10))

y = SCORES - SCORES.min() + 0.5
k, loc, scale = stats.gamma.fit(y, floc=0)
print(f"gamma shape={k:.12g} scale={scale:.12g}")
# scipy's generic weibull_min.fit stops short of the optimum; solve the
# profile score equation for the shape directly instead.
def weibull_score(k):
    return (y**k * np.log(y)).sum() / (y**k).sum() - 1 / k - np.log(y).mean()
c = brentq(weibull_score, 0.1, 10, xtol=1e-15)
print(f"weibull shape={c:.12g} scale={np.mean(y**c) ** (1 / c):.12g}")
xi, loc, scale = stats.genpareto.fit(y, floc=0)
print(f"gpd xi={xi:.12g} scale={scale:.12g}")
z = np.clip(SCORES / 100, 1e-6, 1 - 1e-6)
a, b, loc, scale = stats.beta.fit(z, floc=0, fscale=1)
print(f"beta a={a:.12g} b={b:.12g}")
s, loc, scale = stats.lognorm.fit(y, floc=0)
print(f"lognormal meanlog={np.log(scale):.12g} sdlog={s:.12g}")

# Chi-square critical values at 0.05.
for dof in (1, 2, 7):
    print(f"chi2 crit dof={dof}: {stats.chi2.ppf(0.95, dof):.12g}")
# One-hot observed vs uniform model with 187 subjects.
obs = np.zeros(10); obs[4] = 187
exp = np.full(10, 18.7)
print(f"one-hot statistic={((obs - exp) ** 2 / exp).sum():.12g}")
