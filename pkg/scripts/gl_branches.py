"""GL solution branches on the unit circle as D grows: constant, plane wave
and the real periodic orbit, with their energies."""
import argparse

import numpy as np

from bdg2gl.errors import NoSolutionError
from bdg2gl.glsolve import (bifurcation_thresholds, constant_branch, gl_residual, newton_gl,
                            phase_plane_1d, plane_wave)
from bdg2gl.harness import reference_coefficients
from bdg2gl.model import ModelParams, Potential


def gl_energy(psi, coef, D):
    """int Lambda0 |psi'|^2 - Lambda2 D |psi|^2 + Lambda3/2 |psi|^4 over the unit circle."""
    c = psi.coefficients()
    k = 2 * np.pi * np.fft.fftfreq(psi.m, 1 / psi.m)
    grad = float(np.sum(k ** 2 * np.abs(c) ** 2)) * coef.Lambda0[0, 0]
    a2 = np.abs(psi.psi) ** 2
    return grad + float(np.mean(-coef.Lambda2 * D * a2 + 0.5 * coef.Lambda3 * a2 ** 2))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--D", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    args = ap.parse_args()

    params = ModelParams(Potential.gaussian(20.0, 0.25), 1.0, D=1.0, h=0.2)
    _, coef = reference_coefficients(params)
    print("bifurcation D:", np.array2string(bifurcation_thresholds(coef, 3)[1][:4], precision=5))
    print(f"{'D':>6} {'branch':>12} {'|psi|_L2':>10} {'energy':>12} {'residual':>10}")
    for D in args.D:
        branches = [("constant", lambda: constant_branch(coef, D, m=256)),
                    ("plane k=1", lambda: plane_wave(coef, D, 1, m=256)),
                    ("orbit k=1", lambda: phase_plane_1d(coef, D, 1, m=256)),
                    # shooting loses accuracy near the separatrix; Newton restores it to the roundoff floor
                    ("orbit+newton", lambda: newton_gl(coef, D, phase_plane_1d(coef, D, 1, m=256), tol=1e-10)[0])]
        for name, make in branches:
            try:
                psi = make()
            except NoSolutionError:
                print(f"{D:6.2f} {name:>12}  none")
                continue
            print(f"{D:6.2f} {name:>12} {psi.norm():10.5f} {gl_energy(psi, coef, D):12.5e} "
                  f"{gl_residual(psi, coef, D)[1]:10.2e}")


if __name__ == "__main__":
    main()
