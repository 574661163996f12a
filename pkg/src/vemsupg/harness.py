"""Experiment driver: mesh families, solves, convergence studies, probe tables.

Structured families (cartesian, pentagon) consist of translated copies of a
handful of cell shapes; since every projector matrix is translation-invariant,
element construction and the coercivity probe are cached per shape and reused
across the mesh.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .assemble import DofMap, apply_dirichlet, assemble, energy_error, export_vtk, solve
from .errors import ProbeError
from .forms import (
    DEFAULT_ELL_MAX,
    DEFAULT_PROBE_TOL,
    baseline_vem_forms,
    element_coefficients,
    probe_min_ell,
    sf_forms,
)
from .geometry import ElementGeometry
from .mesh import (
    generate_cartesian,
    generate_concave_pentagons,
    generate_voronoi,
    relabel_boundary,
)
from .problems import get_problem
from .space import LocalSpace

FAMILIES = ("t1", "t2", "t3")


def generate_mesh(family, n, seed=0, lloyd_iters=100, level=0):
    """One mesh of the requested family at per-side resolution ``n``.

    The Voronoi family cannot be refined by splitting, so each level is
    regenerated with n^2 cells from a level-shifted seed.
    """
    if family == "t1":
        return generate_cartesian(n, n)
    if family == "t2":
        return generate_concave_pentagons(n)
    if family == "t3":
        return generate_voronoi(n * n, lloyd_iters=lloyd_iters, seed=seed + level)
    raise ValueError(f"unknown mesh family {family!r}; choose from {FAMILIES}")


# -- per-shape element cache --------------------------------------------------


def _shape_signature(verts):
    anchor = verts.mean(axis=0)
    h = np.sqrt(((verts - anchor) ** 2).sum(axis=1).max())
    rel = np.round((verts - anchor) / h, 12)
    return (len(verts),) + tuple(rel.ravel())


class ElementCache:
    """Per-shape store of geometries, spaces and probe results."""

    def __init__(self):
        self.entries = {}

    def entry(self, verts):
        sig = _shape_signature(verts)
        ent = self.entries.get(sig)
        if ent is None:
            ent = {"anchor": verts.mean(axis=0), "geom": {}, "space": {}, "probe": {}}
            self.entries[sig] = ent
        return ent


def _cacheable(mesh):
    tag = mesh.family_tag or ""
    return tag.startswith("cartesian") or tag.startswith("pentagon")


def build_element(mesh, c, k, ell_mode, probe_tol, ell_max, cache):
    """(geometry, space, chosen ell) of one cell, honoring the shape cache."""
    verts = mesh.cell_vertices(c)
    ent = cache.entry(verts) if cache is not None else None

    def get_geom(ell):
        if ent is None:
            return ElementGeometry(verts, 2 * (k + ell) + 2, k + ell + 1, cell=c)
        key = (k, ell)
        delta = verts.mean(axis=0) - ent["anchor"]
        if key not in ent["geom"]:
            ent["geom"][key] = ElementGeometry(
                verts - delta, 2 * (k + ell) + 2, k + ell + 1, cell=c
            )
        return ent["geom"][key].translated(delta, cell=c)

    if ell_mode == "auto":
        if ent is not None and k in ent["probe"]:
            ell = ent["probe"][k]
        else:
            ell = probe_min_ell(get_geom(ell_max), k, ell_max, probe_tol)
            if ent is not None:
                ent["probe"][k] = ell
    elif isinstance(ell_mode, dict):
        try:
            ell = ell_mode[len(mesh.cells[c])]
        except KeyError:
            raise KeyError(
                f"no fixed increment for {len(mesh.cells[c])}-vertex cells"
            ) from None
    else:
        ell = int(ell_mode)

    geom = get_geom(ell)
    if ent is None:
        space = LocalSpace(geom, k, ell)
    else:
        key = (k, ell)
        if key not in ent["space"]:
            ent["space"][key] = LocalSpace(ent["geom"][key], k, ell)
        space = ent["space"][key].translated(geom)
    return geom, space, ell


class SolveResult:
    """Everything one solve produced, for error evaluation and export."""

    def __init__(self, solution, mesh, dofmap, geoms, spaces, coeffs, forms):
        self.solution = solution
        self.mesh = mesh
        self.dofmap = dofmap
        self.geoms = geoms
        self.spaces = spaces
        self.coeffs = coeffs
        self.forms = forms

    @property
    def mean_peclet(self):
        return float(np.mean([c.peclet for c in self.coeffs]))

    def error(self, problem):
        return energy_error(
            self.mesh, self.geoms, self.spaces, self.coeffs, self.solution, problem
        )

    def sample(self, points):
        """Evaluate the reconstructed solution at points inside the domain."""
        from .basis import eval_poly

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(pts))
        for j, pt in enumerate(pts):
            cell = self._locate(pt)
            poly = self.solution.reconstructions[cell]
            out[j] = eval_poly(self.spaces[cell].basis_k, poly, pt[None, :])[0]
        return out

    def _locate(self, pt):
        for c in range(self.mesh.n_cells):
            verts = self.mesh.cell_vertices(c)
            nxt = np.roll(verts, -1, axis=0)
            d = nxt - verts
            rel = pt - verts
            side = d[:, 0] * rel[:, 1] - d[:, 1] * rel[:, 0]
            if np.all(side >= -1e-12):
                return c
        # concave cells: fall back to the sub-triangulation test
        for c, geom in enumerate(self.geoms):
            for tri in geom.triangles:
                a, b, cc = tri
                s1 = (b - a)[0] * (pt - a)[1] - (b - a)[1] * (pt - a)[0]
                s2 = (cc - b)[0] * (pt - b)[1] - (cc - b)[1] * (pt - b)[0]
                s3 = (a - cc)[0] * (pt - cc)[1] - (a - cc)[1] * (pt - cc)[0]
                if min(s1, s2, s3) >= -1e-12:
                    return c
        raise ValueError(f"point {pt} is outside the mesh")


def solve_problem(
    mesh,
    problem,
    k,
    ell="auto",
    probe_tol=DEFAULT_PROBE_TOL,
    ell_max=DEFAULT_ELL_MAX,
    method="sf",
    cache=None,
):
    """Assemble and solve one problem on one mesh.

    ``method`` selects the stabilization-free forms ("sf") or the classical
    stabilized baseline ("vem", which always runs on the standard ell = 0
    space).  Both paths share numbering, data evaluation and the boundary
    treatment; only the local matrices differ.
    """
    if problem.boundary_classifier is not None:
        relabel_boundary(mesh, problem.boundary_classifier)
    if method not in ("sf", "vem"):
        raise ValueError("method must be 'sf' or 'vem'")
    if cache is None and _cacheable(mesh):
        cache = ElementCache()
    if method == "vem":
        ell = 0
    dofmap = DofMap(mesh, k)
    geoms, spaces, coeffs, forms = [], [], [], []
    for c in range(mesh.n_cells):
        geom, space, _ = build_element(mesh, c, k, ell, probe_tol, ell_max, cache)
        coef = element_coefficients(geom, problem, k)
        if method == "sf":
            lf = sf_forms(geom, space, coef, problem)
        else:
            lf = baseline_vem_forms(geom, space, coef, problem)
        geoms.append(geom)
        spaces.append(space)
        coeffs.append(coef)
        forms.append(lf)
    system = assemble(mesh, dofmap, ((lf.full, lf.rhs) for lf in forms))
    apply_dirichlet(system, problem)
    solution = solve(system).attach_reconstructions(mesh, dofmap, spaces, coeffs)
    return SolveResult(solution, mesh, dofmap, geoms, spaces, coeffs, forms)


# -- experiment configuration -------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment: problem, mesh family, order, refinements, outputs."""

    problem: str = "smooth"
    problem_kwargs: dict = field(default_factory=dict)
    family: str = "t1"
    k: int = 1
    ell: object = "auto"  # "auto" or a fixed integer
    probe_tol: float = DEFAULT_PROBE_TOL
    ell_max: int = DEFAULT_ELL_MAX
    refinements: tuple = (4, 8, 16, 32)
    baseline: bool = False
    seed: int = 0
    lloyd_iters: int = 100
    out_dir: str = None

    def __post_init__(self):
        if not 1 <= self.k <= 4:
            raise ValueError("order k must be in 1..4")
        if any(b <= a for a, b in zip(self.refinements, self.refinements[1:])):
            raise ValueError("refinement schedule must strictly decrease h")

    def make_problem(self):
        return get_problem(self.problem, **self.problem_kwargs)


def _fmt(x):
    return format(float(x), ".17g")


class ConvergenceReport:
    """Per-refinement errors and the observed rates from the last two rows."""

    HEADER = "level,h_max,n_dof,err_sf,err_vem,ratio,mean_pe,alpha_sf,alpha_vem"

    def __init__(self, rows):
        self.rows = rows

    @staticmethod
    def rate(h_prev, h_cur, e_prev, e_cur):
        return float(np.log(e_prev / e_cur) / np.log(h_prev / h_cur))

    @property
    def alpha_sf(self):
        return self.rows[-1]["alpha_sf"] if len(self.rows) > 1 else None

    @property
    def alpha_vem(self):
        return self.rows[-1]["alpha_vem"] if len(self.rows) > 1 else None

    def to_csv(self):
        lines = [self.HEADER]
        for row in self.rows:
            cells = [
                str(row["level"]),
                _fmt(row["h_max"]),
                str(row["n_dof"]),
                _fmt(row["err_sf"]),
                _fmt(row["err_vem"]) if row["err_vem"] is not None else "",
                _fmt(row["ratio"]) if row["ratio"] is not None else "",
                _fmt(row["mean_pe"]),
                _fmt(row["alpha_sf"]) if row["alpha_sf"] is not None else "",
                _fmt(row["alpha_vem"]) if row["alpha_vem"] is not None else "",
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())


def run_convergence(config):
    """Solve on every refinement, compute energy errors and rates, write CSV."""
    problem = config.make_problem()
    if problem.exact_grad is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    log = _RunLog(config)
    rows = []
    for level, n in enumerate(config.refinements):
        mesh = generate_mesh(
            config.family, n, seed=config.seed, lloyd_iters=config.lloyd_iters,
            level=level,
        )
        res_sf = solve_problem(
            mesh, problem, config.k, ell=config.ell,
            probe_tol=config.probe_tol, ell_max=config.ell_max, method="sf",
        )
        err_sf = res_sf.error(problem)
        err_vem = None
        if config.baseline:
            res_vem = solve_problem(
                mesh, problem, config.k, ell=config.ell,
                probe_tol=config.probe_tol, ell_max=config.ell_max, method="vem",
            )
            err_vem = res_vem.error(problem)
        row = {
            "level": level,
            "h_max": mesh.max_diameter(),
            "n_dof": res_sf.solution.n_dofs,
            "err_sf": err_sf,
            "err_vem": err_vem,
            "ratio": (err_vem / err_sf) if err_vem is not None else None,
            "mean_pe": res_sf.mean_peclet,
            "alpha_sf": None,
            "alpha_vem": None,
        }
        if rows:
            prev = rows[-1]
            row["alpha_sf"] = ConvergenceReport.rate(
                prev["h_max"], row["h_max"], prev["err_sf"], row["err_sf"]
            )
            if err_vem is not None and prev["err_vem"] is not None:
                row["alpha_vem"] = ConvergenceReport.rate(
                    prev["h_max"], row["h_max"], prev["err_vem"], row["err_vem"]
                )
        rows.append(row)
        log.line(
            f"level={level} n={n} h={row['h_max']:.6g} ndof={row['n_dof']} "
            f"err_sf={err_sf:.6e}"
            + (f" err_vem={err_vem:.6e}" if err_vem is not None else "")
        )
    report = ConvergenceReport(rows)
    if config.out_dir:
        report.write(os.path.join(config.out_dir, "convergence.csv"))
    log.close()
    return report


def run_field(config):
    """Solve once on the finest configured mesh and export the fields."""
    problem = config.make_problem()
    log = _RunLog(config)
    n = config.refinements[-1]
    mesh = generate_mesh(
        config.family, n, seed=config.seed, lloyd_iters=config.lloyd_iters
    )
    res = solve_problem(
        mesh, problem, config.k, ell=config.ell,
        probe_tol=config.probe_tol, ell_max=config.ell_max, method="sf",
    )
    vertex_vals = res.solution.dofs[: mesh.n_vertices]
    summary = {
        "min_vertex": float(vertex_vals.min()),
        "max_vertex": float(vertex_vals.max()),
        "n_dof": res.solution.n_dofs,
        "mean_pe": res.mean_peclet,
        "result": res,
    }
    print(f"field: min={summary['min_vertex']:.6g} max={summary['max_vertex']:.6g}")
    log.line(
        f"field n={n} ndof={summary['n_dof']} min={summary['min_vertex']:.6g} "
        f"max={summary['max_vertex']:.6g}"
    )
    if config.out_dir:
        name = f"solution_{problem.name or config.problem}_{config.family}_k{config.k}.vtk"
        export_vtk(res.solution, mesh, os.path.join(config.out_dir, name))
    log.close()
    return summary


PROBE_MESH_SIZE = {"t1": 2, "t2": 2, "t3": 10}


def probe_table(config, orders=(1, 2, 3, 4), families=None):
    """Minimal increments per (family, vertex count, order).

    Each family contributes one representative mesh; every distinct cell
    shape is probed and entries aggregate by vertex count taking the largest
    increment (the safe choice when shapes of equal vertex count differ).
    Entries that exhaust the search cap are marked with an em dash.
    """
    if families is None:
        families = [config.family] if config.family else list(FAMILIES)
    log = _RunLog(config)
    table = {}
    for family in families:
        n = PROBE_MESH_SIZE[family]
        mesh = generate_mesh(
            family, n, seed=config.seed, lloyd_iters=config.lloyd_iters
        )
        seen = {}
        for c in range(mesh.n_cells):
            sig = _shape_signature(mesh.cell_vertices(c))
            if sig not in seen:
                seen[sig] = c
        for k in orders:
            for sig, c in seen.items():
                n_v = len(mesh.cells[c])
                geom = ElementGeometry(
                    mesh.cell_vertices(c),
                    2 * (k + config.ell_max) + 2,
                    k + config.ell_max + 1,
                    cell=c,
                )
                try:
                    ell = probe_min_ell(geom, k, config.ell_max, config.probe_tol)
                except ProbeError:
                    ell = None
                key = (family, n_v, k)
                cur = table.get(key)
                if cur is None or (ell is not None and cur != "—" and ell > cur):
                    table[key] = ell if ell is not None else "—"
                elif ell is None:
                    table[key] = "—"
        log.line(f"probed family={family} shapes={len(seen)}")
    if config.out_dir:
        path = os.path.join(config.out_dir, "probe_table.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("family,n_vertices,k,ell\n")
            for (family, n_v, k) in sorted(table):
                fh.write(f"{family},{n_v},{k},{table[(family, n_v, k)]}\n")
    log.close()
    return table


def format_probe_table(table):
    """Pretty layout: one row per order, one column per (family, N_V)."""
    cols = sorted({(f, nv) for f, nv, _ in table})
    orders = sorted({k for _, _, k in table})
    head = "k    " + "  ".join(f"{f}:N_V={nv}" for f, nv in cols)
    lines = [head]
    for k in orders:
        cells = [str(table.get((f, nv, k), "")) for f, nv in cols]
        lines.append(f"k={k}  " + "  ".join(c.center(len(f"{f}:N_V={nv}")) for (f, nv), c in zip(cols, cells)))
    return "\n".join(lines)


class _RunLog:
    """Plain-text log of one harness run, written next to the other outputs."""

    def __init__(self, config):
        self._fh = None
        if config.out_dir:
            os.makedirs(config.out_dir, exist_ok=True)
            self._fh = open(
                os.path.join(config.out_dir, "run.log"), "a", encoding="utf-8"
            )
            self.line(f"config: {config}")

    def line(self, text):
        if self._fh is not None:
            self._fh.write(text + "\n")

    def close(self):
        if self._fh is not None:
            self._fh.close()
