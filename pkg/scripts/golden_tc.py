"""Independent T_c oracle for the bundled Gaussian reference model.

Works in momentum space: with W = V^{1/2} (a Gaussian with closed-form Fourier
transform) the pairing operator W chi_T(p^2 - mu) W is assembled as a Galerkin
matrix on plane waves of a large box, reduced to even (cosine) modes, and the
temperature where its top eigenvalue crosses 1 is found with brentq.
The result is frozen into src/bdg2gl/data/golden.json.
"""
import argparse
import json
from pathlib import Path

import numpy as np
from scipy.optimize import brentq


def chi(E, beta):
    x = 0.5 * beta * E
    small = np.abs(E) < 1e-8
    out = np.empty_like(E)
    out[~small] = np.tanh(x[~small]) / E[~small]
    out[small] = 0.5 * beta
    return out


def top_eig(T, v0, a, mu, L, n):
    j = np.arange(-n // 2, n // 2)
    p = 2 * np.pi * j / L
    # W(x) = sqrt(v0) exp(-x^2/(4 a^2)); What(k) = (1/L) int W(x) e^{-ikx} dx
    what = lambda k: np.sqrt(v0) * 2 * a * np.sqrt(np.pi) * np.exp(-a * a * k * k) / L
    Wm = what(p[:, None] - p[None, :])
    M = Wm @ np.diag(chi(p ** 2 - mu, 1.0 / T)) @ Wm
    # even subspace: symmetric combinations of +p and -p
    m = n // 2
    B = np.zeros((n, m + 1))
    B[m, 0] = 1.0
    for i in range(1, m):
        B[m + i, i] = B[m - i, i] = np.sqrt(0.5)
    B[0, m] = 1.0
    Me = B.T @ (0.5 * (M + M.T)) @ B
    return np.linalg.eigvalsh(Me)[-1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--v0", type=float, default=20.0)
    ap.add_argument("--a", type=float, default=0.25)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--L", type=float, default=20.0)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()
    f = lambda T: top_eig(T, args.v0, args.a, args.mu, args.L, args.n) - 1.0
    Tc = brentq(f, 1.0, 50.0, xtol=1e-15, rtol=1e-15)
    rec = {"model": {"kind": "gaussian", "v0": args.v0, "a": args.a, "mu": args.mu},
           "oracle": {"method": "momentum-space Galerkin, cosine modes, brentq",
                      "box": args.L, "modes": args.n},
           "Tc": Tc}
    print(json.dumps(rec, indent=2))
    if args.write:
        out = Path(__file__).resolve().parents[1] / "src" / "bdg2gl" / "data" / "golden.json"
        out.write_text(json.dumps(rec, indent=2) + "\n")


if __name__ == "__main__":
    main()
