"""Minimal enhancement increments per cell shape and order.

For every distinct cell shape in the three families, the probe searches for
the smallest increment whose projected-gradient Gram matrix keeps only the
constants in its kernel.  Entries depend on the actual geometry, not just
the vertex count: compare squares with generic Voronoi quadrilaterals.
"""

from vemsupg.harness import ExperimentConfig, format_probe_table, probe_table

config = ExperimentConfig()
table = probe_table(config, orders=(1, 2, 3, 4), families=["t1", "t2", "t3"])
print(format_probe_table(table))

print("\nsquares need 2 at order 2, generic quadrilaterals only 1:")
for key in sorted(table):
    family, n_v, k = key
    if k == 2 and n_v == 4:
        print(f"  {family} (N_V=4), k=2 -> {table[key]}")
