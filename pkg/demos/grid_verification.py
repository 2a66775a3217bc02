"""Evolve a grid density and verify the Harnack bounds on it.

A spread-out Gaussian is advanced under U = v^2/2 with the positivity-
preserving splitting scheme; every unit of mass is accounted for in the
flux ledger.  The matrix and scalar Harnack checks then run on the
central window, where the Dirichlet truncation at the domain edge does
not contaminate the log-Hessian estimates.
"""

import os

import numpy as np

from harnack_forge import (
    QuadraticPotential,
    curvature_of,
    evolve,
    kernel_field,
    save_snapshot,
    verify_matrix_harnack,
    verify_scalar_harnack,
)


def main():
    potential = QuadraticPotential(q_vv=1.0)
    K = curvature_of(potential)
    print(f"potential U = v^2/2, curvature pair (k1, k2) = ({K.k1:g}, {K.k2:g})")

    field = kernel_field(0.2, extent=4.0, n=128, sigma2=1.0)
    print(f"initial field: t={field.t}, mass {field.mass():.6f}")

    out, rep = evolve(field, potential, 0.6, scheme="lie")
    print(
        f"evolved to t={out.t}: {rep.n_steps} steps of dt={rep.dt:.2e}, "
        f"mass {rep.mass_initial:.6f} -> {rep.mass_final:.6f}"
    )
    print(
        f"flux ledger: boundary loss {rep.x_boundary_loss + rep.diffusion_loss:.2e}, "
        f"drift source {rep.drift_source:.2e}, "
        f"discrepancy {rep.ledger_discrepancy:.1e}"
    )

    window = (-2.0, 2.0, -2.0, 2.0)
    mrep = verify_matrix_harnack(out, potential, curvature=K, region=window)
    srep = verify_scalar_harnack(out, potential, curvature=K, region=window)
    print(
        f"\nmatrix check: min margin {mrep.min_margin:+.4f} at {mrep.argmin}, "
        f"{mrep.n_tested} points, passed={mrep.passed}"
    )
    print(
        f"scalar check: min margin {srep.min_margin:+.4f}, passed={srep.passed}"
    )

    neg = verify_matrix_harnack(
        out, potential, curvature=K, region=window, bound_shift=0.5
    )
    print(f"negative control (bound + 0.5 I): passed={neg.passed} (must be False)")

    os.makedirs("demo_out", exist_ok=True)
    save_snapshot(out, os.path.join("demo_out", "snapshot_v2"))
    print("\nsnapshot written to demo_out/snapshot_v2.bin / .json")


if __name__ == "__main__":
    main()
