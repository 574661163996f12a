"""Convergence on the anisotropic boundary-layer benchmark.

Diffusivity 1e-9 with velocity (1, 0.545): the element Peclet numbers are
around 1e6-1e7, so the streamline term dominates the energy norm.  The run
compares the stabilization-free scheme with the classical stabilized one on
cartesian meshes and reports the rate from the last two levels.
"""

from vemsupg.harness import ExperimentConfig, run_convergence

for k in (1, 2):
    cfg = ExperimentConfig(
        problem="test1",
        family="t1",
        k=k,
        ell={4: {1: 1, 2: 2}[k]},  # reference square-column increments
        refinements=(8, 16, 32),
        baseline=True,
    )
    rep = run_convergence(cfg)
    print(f"\norder k={k}")
    print("   h        err (this)   err (classical)   ratio   mean Pe")
    for row in rep.rows:
        print(
            f"  {row['h_max']:.4f}   {row['err_sf']:.4e}   {row['err_vem']:.4e} "
            f"     {row['ratio']:.3f}   {row['mean_pe']:.2e}"
        )
    print(f"  rate from the last two levels: {rep.alpha_sf:.3f}")
