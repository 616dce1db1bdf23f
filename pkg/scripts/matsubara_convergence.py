"""Truncation error of the Matsubara sums for K_T and N_T against the
spectral evaluation, on a random real symmetric pairing field."""
import argparse

import numpy as np

from bdg2gl.linear import KT_kernel
from bdg2gl.model import LatticeGrid, ModelParams, Potential
from bdg2gl.nonlinear import KT_matsubara, NT_exact, NT_matsubara
from bdg2gl.opcalc import norm, random_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--beta", type=float, default=0.15)
    ap.add_argument("--sigma-op", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = LatticeGrid.torus(args.n, args.h)
    p = ModelParams(Potential.gaussian(20.0, 0.25), 1.0, h=args.h)
    p = p.with_beta_c(args.beta * (1 + p.D * args.h ** 2))
    s = random_kernel(grid, np.random.default_rng(args.seed))
    s = s * (args.sigma_op / norm(s, "op"))
    kt, nt = KT_kernel(s, p.beta, p.mu), NT_exact(s, p)
    nmax = np.array([8, 16, 32, 64, 128])
    ek = np.array([norm(KT_matsubara(s, p, m) - kt) / norm(kt) for m in nmax])
    en = np.array([norm(NT_matsubara(s, p, m).kernel - nt) / norm(nt) for m in nmax])
    print(f"{'n_max':>6} {'K_T rel err':>12} {'N_T rel err':>12}")
    for m, a, b in zip(nmax, ek, en):
        print(f"{m:6d} {a:12.3e} {b:12.3e}")
    fit = lambda e: np.polyfit(np.log(nmax), np.log(e), 1)[0]
    print(f"log-log slopes: K_T {fit(ek):.3f}, N_T {fit(en):.3f}")


if __name__ == "__main__":
    main()
