# Copyright 2026 The IQSD Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Exact epsilon-SVR dual objectives for the small instances in svr_test.cpp.

Solves min 1/2 z'Qz + p'z, y'z = 0, 0 <= z <= C over the 2l-variable dual
with a generic interior-point QP solver (cvxopt), after the same [-1, 1]
min-max feature scaling the library applies.
"""

import numpy as np
from cvxopt import matrix, solvers

solvers.options["show_progress"] = False
solvers.options["abstol"] = 1e-12
solvers.options["reltol"] = 1e-12
solvers.options["feastol"] = 1e-12

INSTANCES = {
    "line8": dict(
        x=[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0]],
        y=[0.1, 0.9, 2.2, 2.8, 4.1, 5.3, 5.9, 7.2],
        c=4.0, eps=0.1, g=0.5),
    "cube10": dict(
        x=[[0.2, 1.5, -3.0], [0.8, 0.1, 2.0], [1.4, 2.2, 0.5], [-0.6, 1.0, 1.0],
           [2.0, -1.0, 0.0], [0.0, 0.0, -1.5], [1.1, 1.1, 1.1], [-1.2, 0.4, 2.5],
           [0.5, -0.5, -0.5], [1.8, 2.5, -2.0]],
        y=[1.0, -0.4, 2.3, 0.7, -1.1, 0.2, 1.5, -0.8, 0.0, 2.9],
        c=2.0, eps=0.2, g=1.0 / 3.0),
    "bounded6": dict(
        x=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5], [0.2, 0.9]],
        y=[3.0, -2.0, 5.0, 0.0, 8.0, -4.0],
        c=0.5, eps=0.05, g=2.0),
}


def scale(x):
    x = np.asarray(x, float)
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = hi - lo
    out = np.zeros_like(x)
    nz = span > 0
    out[:, nz] = -1.0 + 2.0 * (x[:, nz] - lo[nz]) / span[nz]
    return out


def dual_objective(inst):
    xs = scale(inst["x"])
    t = np.asarray(inst["y"], float)
    l = len(t)
    d2 = ((xs[:, None, :] - xs[None, :, :]) ** 2).sum(axis=2)
    k = np.exp(-inst["g"] * d2)
    yy = np.concatenate([np.ones(l), -np.ones(l)])
    kk = np.block([[k, k], [k, k]])
    q = yy[:, None] * yy[None, :] * kk
    p = np.concatenate([inst["eps"] - t, inst["eps"] + t])
    n = 2 * l
    g = np.vstack([-np.eye(n), np.eye(n)])
    h = np.concatenate([np.zeros(n), inst["c"] * np.ones(n)])
    sol = solvers.qp(matrix(q), matrix(p), matrix(g), matrix(h),
                     matrix(yy[None, :]), matrix(0.0))
    z = np.array(sol["x"]).ravel()
    return 0.5 * z @ q @ z + p @ z


if __name__ == "__main__":
    for name, inst in INSTANCES.items():
        print(f"{name} {dual_objective(inst):.12f}")
