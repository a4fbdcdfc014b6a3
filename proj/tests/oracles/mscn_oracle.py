"""Naive windowed MSCN on a 16x16 two-tone fixture, for freezing into
tests/features_test.cpp.

Run: python3 tests/oracles/mscn_oracle.py
"""
import numpy as np

img = np.full((16, 16), 0.75)
for y in range(16):
    for x in range(16):
        if x < 6 or y >= 10:
            img[y, x] = 0.25

I = 255.0 * img
sigma_w = 7.0 / 6.0
k = np.arange(-3, 4)
g = np.exp(-0.5 * (k[:, None] ** 2 + k[None, :] ** 2) / sigma_w**2)
w = g / g.sum()
P = np.pad(I, 3, mode="symmetric")
out = np.zeros_like(I)
for y in range(16):
    for x in range(16):
        win = P[y:y + 7, x:x + 7]
        mu = (w * win).sum()
        sd = np.sqrt(max((w * (win - mu) ** 2).sum(), 0.0))
        out[y, x] = (I[y, x] - mu) / (sd + 1.0)

for y, x in [(0, 0), (5, 5), (5, 6), (9, 9), (10, 9), (3, 12), (15, 15), (8, 4)]:
    print(f"{{{x}, {y}, {out[y, x]:.15g}}},")
