#!/usr/bin/env python3
"""Regenerates data/sample_library.csv, the bundled stand-in spectral library.

Each material is a smooth continuum (a low-order curve over 0.4-2.5 um)
carved by a few Gaussian absorption bands, clipped to [0.02, 0.95]. The
script retries with a new draw until every pair of materials is separated by
more than 0.05 rad of spectral angle.
"""

import argparse
import itertools
import math

import numpy as np

NAMES = [
    "alunite_like", "kaolinite_like", "montmorillonite_like", "buddingtonite_like",
    "muscovite_like", "chalcedony_like", "nontronite_like", "andradite_like",
    "sphene_like", "dumortierite_like",
]


def material(rng, wl):
    lo, hi = wl[0], wl[-1]
    x = (wl - lo) / (hi - lo)
    base = rng.uniform(0.25, 0.6)
    slope = rng.uniform(-0.25, 0.3)
    curve = rng.uniform(-0.3, 0.2)
    spectrum = base + slope * x + curve * x * (1 - x)
    for _ in range(rng.integers(2, 5)):
        center = rng.uniform(lo + 0.05, hi - 0.05)
        width = rng.uniform(0.02, 0.15)
        depth = rng.uniform(0.05, 0.3)
        spectrum -= depth * spectrum * np.exp(-0.5 * ((wl - center) / width) ** 2)
    return np.clip(spectrum, 0.02, 0.95)


def min_pairwise_sad(lib):
    best = math.inf
    for i, j in itertools.combinations(range(lib.shape[1]), 2):
        a, b = lib[:, i], lib[:, j]
        cos = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
        best = min(best, math.acos(min(1.0, cos)))
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/sample_library.csv")
    parser.add_argument("--seed", type=int, default=20190417)
    parser.add_argument("--bands", type=int, default=224)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    wl = np.linspace(0.4, 2.5, args.bands)
    while True:
        lib = np.column_stack([material(rng, wl) for _ in NAMES])
        if min_pairwise_sad(lib) > 0.05:
            break

    with open(args.out, "w", encoding="ascii") as f:
        f.write("wavelength," + ",".join(NAMES) + "\n")
        for b in range(args.bands):
            f.write(",".join(repr(float(v)) for v in [round(wl[b], 6), *np.round(lib[b], 6)]) + "\n")
    print(f"wrote {args.out}: {args.bands} bands, {len(NAMES)} materials, "
          f"min pairwise SAD {min_pairwise_sad(lib):.4f} rad")


if __name__ == "__main__":
    main()
