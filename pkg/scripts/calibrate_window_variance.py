"""Sweep the window variance ``nu`` and compare scree fractions with the reference values.

For each ``nu`` the Karate and US sensor scenarios are run over a set of seeds
(50 windows each) and the median scree fractions, the US cumulative 4-PC
fraction and the share of runs where the 0.95 threshold picks the expected q
are printed. The reference fractions are 0.886/0.071 (Karate) and
0.843/0.060/0.031/0.019 (US sensor).

    python scripts/calibrate_window_variance.py --nus 0.1 0.15 0.2 0.25 0.5 1.0
"""
import argparse

import numpy as np

from gfreqpca import build_laplacian, builtin_karate, builtin_us_sensor_coords, knn_gaussian_graph, scree
from gfreqpca.simulation import karate_model, simulate_and_fit, us_sensor_model

KARATE_REF = np.array([0.886, 0.071])
US_REF = np.array([0.843, 0.060, 0.031, 0.019])


def sweep(nu, seeds, windows, karate_so, us_so):
    k_fr, k_q, u_fr, u_q = [], [], [], []
    for s in seeds:
        _, m = simulate_and_fit(karate_model(), karate_so, s, windows, nu)
        k_fr.append(scree(m)[:2])
        k_q.append(m.q)
        _, m = simulate_and_fit(us_sensor_model(), us_so, s, windows, nu)
        u_fr.append(scree(m)[:4])
        u_q.append(m.q)
    k_med, u_med = np.median(k_fr, axis=0), np.median(u_fr, axis=0)
    sse = float(((k_med - KARATE_REF) ** 2).sum() + ((u_med - US_REF) ** 2).sum())
    return {
        "karate": k_med,
        "karate_q2": np.mean(np.array(k_q) == 2),
        "us": u_med,
        "us_cum4": float(np.median(np.sum(u_fr, axis=1))),
        "us_q4": np.mean(np.array(u_q) == 4),
        "sse": sse,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nus", type=float, nargs="+", default=[0.0, 0.1, 0.15, 0.2, 0.25, 0.3, 0.5, 1.0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--windows", type=int, default=50)
    args = ap.parse_args()

    karate_so = build_laplacian(builtin_karate())
    us_so = build_laplacian(knn_gaussian_graph(builtin_us_sensor_coords(), 7, "haversine"))
    print(f"{'nu':>6} {'K PC1':>6} {'K PC2':>6} {'K q=2':>6} {'US PC1..PC4':>28} {'cum4':>6} {'q=4':>5} {'SSE':>9}")
    for nu in args.nus:
        r = sweep(nu, range(args.seeds), args.windows, karate_so, us_so)
        us = " ".join(f"{x:.3f}" for x in r["us"])
        print(f"{nu:6.3f} {r['karate'][0]:6.3f} {r['karate'][1]:6.3f} {r['karate_q2']:6.2f} "
              f"{us:>28} {r['us_cum4']:6.3f} {r['us_q4']:5.2f} {r['sse']:9.2e}")


if __name__ == "__main__":
    main()
