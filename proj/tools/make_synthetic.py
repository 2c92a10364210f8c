"""Generate data/synthetic_1000.csv: a 3-d Gaussian mixture with two
sensitive attributes (sex, band) whose mix varies by mixture component."""

import argparse
import csv

import numpy as np


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20190501)
    parser.add_argument("--out", default="data/synthetic_1000.csv")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    centers = np.array([[0, 0, 0], [6, 1, 2], [1, 7, -1], [7, 7, 4], [3, 3, 9]], dtype=float)
    p_female = np.array([0.2, 0.7, 0.45, 0.3, 0.6])
    p_band = np.array(
        [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4], [0.1, 0.2, 0.7], [0.4, 0.4, 0.2]]
    )

    comp = rng.integers(0, len(centers), size=args.n)
    points = centers[comp] + rng.normal(scale=1.4, size=(args.n, 3))
    sex = np.where(rng.random(args.n) < p_female[comp], "F", "M")
    band = [rng.choice(["low", "mid", "high"], p=p_band[c]) for c in comp]

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "x3", "sex", "band"])
        for i in range(args.n):
            w.writerow([f"{points[i, 0]:.4f}", f"{points[i, 1]:.4f}", f"{points[i, 2]:.4f}", sex[i], band[i]])


if __name__ == "__main__":
    main()
