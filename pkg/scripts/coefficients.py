"""GL coefficients of the Gaussian reference model, with independent cross-checks."""
import argparse

import numpy as np

from bdg2gl.glcoef import G_hessian, lambda0_at, lambda3_closed
from bdg2gl.glsolve import bifurcation_thresholds
from bdg2gl.harness import SweepConfig, reference_coefficients
from bdg2gl.model import ModelParams, Potential


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--v0", type=float, default=20.0)
    ap.add_argument("--a", type=float, default=0.25)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--n-rel", type=int, default=256)
    args = ap.parse_args()

    params = ModelParams(Potential.gaussian(args.v0, args.a), args.mu, D=1.0, h=0.2)
    gd, coef = reference_coefficients(params, SweepConfig(n_rel_ref=args.n_rel))
    p = params.with_beta_c(gd.beta_c)
    H = G_hessian(gd, p)
    L0b = lambda0_at(p.beta, gd, p)
    print(f"T_c        = {gd.Tc:.14f}   (beta_c = {gd.beta_c:.14f})")
    print(f"theta      = {gd.theta:.6f}")
    print(f"Lambda0    = {coef.Lambda0[0, 0]:.15e}")
    print(f"Lambda2    = {coef.Lambda2:.15e}")
    print(f"Lambda3    = {coef.Lambda3:.15e}   (printed convention {coef.lambda3_as_printed:.6e})")
    print(f"Lambda3 closed form rel. diff  {abs(lambda3_closed(gd, p) / coef.Lambda3 - 1):.2e}")
    print(f"Hessian vs 2 Lambda0(beta)     {float(np.abs(H / (2 * L0b) - 1).max()):.2e}")
    print(f"|psi| on the constant branch   {np.sqrt(coef.Lambda2 / coef.Lambda3):.6f} sqrt(D)")
    print("bifurcation D:", np.array2string(bifurcation_thresholds(coef, 3)[1], precision=5))


if __name__ == "__main__":
    main()
