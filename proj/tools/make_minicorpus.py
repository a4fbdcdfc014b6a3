#!/usr/bin/env python3
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
"""Generates the bundled data/ corpus.

data/minicorpus/images/   20 grayscale 96x96 PNGs: 5 scikit-image sample
                          contents x {pristine, blur, noise, jpeg}
data/minicorpus/scores.csv  52 subjects (50 consistent raters drawn from
                          per-image alpha-stable laws, 2 random spammers)
data/minicorpus/labels.csv  image_id,distortion,content
data/synthetic_scores.csv 50 images x 187 subjects, per-image stable laws
                          with alpha in [1.2, 2]
data/synthetic_params.csv the generating parameters of synthetic_scores.csv

Scores are truncated to [0, 100] by redrawing and rounded to one decimal.
"""

import io
import os

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter
from scipy.stats import levy_stable
from skimage import color, data, transform

levy_stable.parameterization = "S1"

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
SIDE = 96
CONTENTS = {
    "camera": lambda: data.camera(),
    "astronaut": lambda: color.rgb2gray(data.astronaut()),
    "coffee": lambda: color.rgb2gray(data.coffee()),
    "chelsea": lambda: color.rgb2gray(data.chelsea()),
    "rocket": lambda: color.rgb2gray(data.rocket()),
}
# Nominal quality (score location) per distortion.
QUALITY = {"pristine": 82.0, "blur": 50.0, "noise": 42.0, "jpeg": 30.0}


def to_unit(img):
    img = np.asarray(img, dtype=float)
    if img.max() > 1.0:
        img = img / 255.0
    h, w = img.shape
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    img = img[top:top + s, left:left + s]
    img = transform.resize(img, (SIDE, SIDE), anti_aliasing=True)
    return np.clip(img, 0.0, 1.0)


def to_u8(img):
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def distort(img, kind, rng):
    if kind == "pristine":
        return img
    if kind == "blur":
        return gaussian_filter(img, 1.5, mode="mirror")
    if kind == "noise":
        return np.clip(img + rng.normal(0.0, 0.1, img.shape), 0.0, 1.0)
    buf = io.BytesIO()
    Image.fromarray(to_u8(img)).save(buf, format="JPEG", quality=8)
    buf.seek(0)
    return np.asarray(Image.open(buf), dtype=float) / 255.0


def truncated_stable(alpha, beta, gamma, mu, n, rng):
    out = np.empty(0)
    while out.size < n:
        x = levy_stable.rvs(alpha, beta, loc=mu, scale=gamma, size=2 * n, random_state=rng)
        out = np.concatenate([out, x[(x >= 0.0) & (x <= 100.0)]])
    return np.round(out[:n], 1)


def write_scores(path, image_ids, columns, subjects):
    with open(path, "w") as f:
        f.write("subject_id," + ",".join(image_ids) + "\n")
        for i, s in enumerate(subjects):
            f.write(s + "," + ",".join(f"{c[i]:g}" for c in columns) + "\n")


def minicorpus(rng):
    out = os.path.join(ROOT, "minicorpus")
    os.makedirs(os.path.join(out, "images"), exist_ok=True)
    ids, labels, columns = [], [], []
    for ci, (content, load) in enumerate(CONTENTS.items()):
        base = to_unit(load())
        for kind, q in QUALITY.items():
            image_id = f"{content}_{kind}"
            img = distort(base, kind, rng)
            Image.fromarray(to_u8(img)).save(os.path.join(out, "images", image_id + ".png"))
            mu = q + rng.uniform(-6.0, 6.0)
            alpha = rng.uniform(1.5, 2.0)
            beta = float(np.clip((50.0 - mu) / 60.0, -0.8, 0.8))
            gamma = 7.0 + 0.08 * min(mu, 100.0 - mu) + rng.uniform(-1.0, 1.0)
            columns.append(truncated_stable(alpha, beta, gamma, mu, 50, rng))
            ids.append(image_id)
            labels.append((image_id, kind, content))
    subjects = [f"s{i:02d}" for i in range(1, 51)]
    for k in range(2):
        spam = np.round(rng.uniform(0.0, 100.0, len(ids)), 1)
        for j in range(len(ids)):
            columns[j] = np.append(columns[j], spam[j])
        subjects.append(f"spammer{k + 1}")
    write_scores(os.path.join(out, "scores.csv"), ids, columns, subjects)
    with open(os.path.join(out, "labels.csv"), "w") as f:
        f.write("image_id,distortion,content\n")
        for row in labels:
            f.write(",".join(row) + "\n")


def synthetic(rng):
    ids, columns, params = [], [], []
    for j in range(50):
        alpha = rng.uniform(1.2, 2.0)
        beta = rng.uniform(-0.6, 0.6)
        gamma = rng.uniform(5.0, 11.0)
        mu = rng.uniform(30.0, 70.0)
        ids.append(f"syn{j + 1:02d}")
        columns.append(truncated_stable(alpha, beta, gamma, mu, 187, rng))
        params.append((alpha, beta, gamma, mu))
    subjects = [f"r{i:03d}" for i in range(1, 188)]
    write_scores(os.path.join(ROOT, "synthetic_scores.csv"), ids, columns, subjects)
    with open(os.path.join(ROOT, "synthetic_params.csv"), "w") as f:
        f.write("image_id,alpha,beta,gamma,mu\n")
        for i, p in zip(ids, params):
            f.write(i + "," + ",".join(f"{v:.6f}" for v in p) + "\n")


if __name__ == "__main__":
    minicorpus(np.random.default_rng(20260101))
    synthetic(np.random.default_rng(20260202))
