"""Global assembly, boundary conditions, linear solve and postprocessing."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import MonomialBasis, eval_basis, grad_map, poly_dim
from .errors import MeshError, SolveError

_RESIDUAL_TOL = 1e-10


class DofMap:
    """Global numbering: vertex DOFs, then edge DOFs, then cell moments.

    Edge-internal DOFs of a shared edge coincide for both cells: they are
    stored along the ascending-vertex-index direction, and the symmetric
    Gauss-Lobatto layout makes the reversed traversal a pure index flip.
    """

    def __init__(self, mesh, k):
        self.mesh = mesh
        self.k = k
        self.n_edge_internal = k - 1
        self.n_moments = poly_dim(k - 2)
        self.vertex_offset = 0
        self.edge_offset = mesh.n_vertices
        self.cell_offset = mesh.n_vertices + mesh.n_edges * self.n_edge_internal
        self.n_dofs = self.cell_offset + mesh.n_cells * self.n_moments

    def cell_dofs(self, c):
        """Global DOF indices of cell c, aligned with the local layout."""
        mesh = self.mesh
        cell = mesh.cells[c]
        out = list(cell)
        for e, forward in mesh.cell_edges[c]:
            base = self.edge_offset + e * self.n_edge_internal
            idx = range(base, base + self.n_edge_internal)
            out.extend(idx if forward else reversed(idx))
        base = self.cell_offset + c * self.n_moments
        out.extend(range(base, base + self.n_moments))
        return np.asarray(out, dtype=int)

    def boundary_values(self, problem):
        """Prescribed Dirichlet DOFs and values, with label-priority tie-break.

        Returns (indices, values); raises MeshError on an unlabeled or
        unresolvable boundary edge.
        """
        mesh, k = self.mesh, self.k
        from .quadrature import gauss_lobatto_interior

        params = gauss_lobatto_interior(k)
        best = {}

        def offer(dof, rank, value):
            cur = best.get(dof)
            if cur is None or rank < cur[0]:
                best[dof] = (rank, value)

        for c, i in mesh.boundary_edges:
            label = mesh.boundary_labels.get((c, i))
            if label is None:
                raise MeshError(f"boundary edge (cell {c}, edge {i}) has no label")
            g = problem.dirichlet_for(label)
            if g is None:
                raise MeshError(
                    f"no Dirichlet data for boundary label {label!r} (cell {c})"
                )
            rank = problem.label_rank(label)
            cell = mesh.cells[c]
            a, b = cell[i], cell[(i + 1) % len(cell)]
            pa, pb = mesh.vertices[a], mesh.vertices[b]
            offer(a, rank, float(g(pa[None, :])[0]))
            offer(b, rank, float(g(pb[None, :])[0]))
            if self.n_edge_internal:
                e, forward = mesh.cell_edges[c][i]
                pts = pa + np.outer(params, pb - pa)
                vals = np.asarray(g(pts), dtype=float)
                base = self.edge_offset + e * self.n_edge_internal
                order = range(self.n_edge_internal)
                for t, v in zip(order if forward else reversed(order), vals):
                    offer(base + t, rank, float(v))
        if not best:
            return np.empty(0, dtype=int), np.empty(0)
        idx = np.fromiter(sorted(best), dtype=int)
        vals = np.array([best[i][1] for i in idx])
        return idx, vals


class GlobalSystem:
    """Assembled sparse operator and load, before and after elimination."""

    def __init__(self, matrix, rhs, dofmap):
        self.matrix = matrix
        self.rhs = rhs
        self.dofmap = dofmap
        self.n_dofs = dofmap.n_dofs
        self.fixed_idx = None
        self.fixed_vals = None
        self.free_idx = None
        self.reduced_matrix = None
        self.reduced_rhs = None


def assemble(mesh, dofmap, cell_matrices):
    """Scatter-add local (matrix, rhs) pairs into the global sparse system.

    ``cell_matrices`` is an iterable over cells of (K_local, f_local); the
    reduction order is fixed by cell index, so entries are deterministic.
    """
    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.n_dofs)
    for c, (k_loc, f_loc) in enumerate(cell_matrices):
        if not np.all(np.isfinite(k_loc)) or not np.all(np.isfinite(f_loc)):
            raise MeshError(f"non-finite local contribution from cell {c}")
        dofs = dofmap.cell_dofs(c)
        if len(dofs) != k_loc.shape[0]:
            raise MeshError(f"cell {c}: local matrix does not match DOF count")
        grid = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(grid[0].ravel())
        cols.append(grid[1].ravel())
        vals.append(np.asarray(k_loc, dtype=float).ravel())
        np.add.at(rhs, dofs, f_loc)
    n = dofmap.n_dofs
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return GlobalSystem(matrix, rhs, dofmap)


def apply_dirichlet(system, problem):
    """Eliminate prescribed boundary DOFs, correcting the right-hand side."""
    idx, vals = system.dofmap.boundary_values(problem)
    mask = np.zeros(system.n_dofs, dtype=bool)
    mask[idx] = True
    free = np.nonzero(~mask)[0]
    csr = system.matrix.tocsc()
    system.fixed_idx = idx
    system.fixed_vals = vals
    system.free_idx = free
    system.reduced_matrix = csr[free][:, free].tocsr()
    lift = csr[free][:, idx] @ vals if len(idx) else 0.0
    system.reduced_rhs = system.rhs[free] - lift
    return system


def solve(system):
    """Direct sparse solve of the reduced system with a residual guarantee."""
    if system.reduced_matrix is None:
        raise SolveError("apply_dirichlet must run before solve")
    a = system.reduced_matrix.tocsc()
    b = system.reduced_rhs
    n = a.shape[0]
    full = np.zeros(system.n_dofs)
    if len(system.fixed_idx):
        full[system.fixed_idx] = system.fixed_vals
    if n == 0:
        print(f"solve: n={system.n_dofs} residual=0.0e+00")
        return DiscreteSolution(full, system, residual=0.0)
    try:
        lu = spla.splu(a)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SolveError(f"sparse factorization failed: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise SolveError("singular system: factorization produced non-finite values")
    norm_b = np.linalg.norm(b)
    residual = np.linalg.norm(a @ x - b) / (norm_b if norm_b > 0 else 1.0)
    if residual > _RESIDUAL_TOL:
        raise SolveError(f"residual {residual:.3e} above tolerance {_RESIDUAL_TOL:g}")
    full[system.free_idx] = x
    print(f"solve: n={system.n_dofs} residual={residual:.6e}")
    return DiscreteSolution(full, system, residual=residual)


class DiscreteSolution:
    """Global DOF vector plus per-element polynomial reconstructions."""

    def __init__(self, dofs, system, residual):
        self.dofs = dofs
        self.system = system
        self.residual = residual
        self.n_dofs = len(dofs)
        self.reconstructions = None  # list of P_k coefficient vectors
        self.ell = None
        self.peclet = None
        self.tau = None

    def attach_reconstructions(self, mesh, dofmap, spaces, coeffs):
        self.reconstructions = []
        self.ell = np.array([s.ell for s in spaces], dtype=int)
        self.peclet = np.array([c.peclet for c in coeffs])
        self.tau = np.array([c.tau for c in coeffs])
        for c, space in enumerate(spaces):
            local = self.dofs[dofmap.cell_dofs(c)]
            self.reconstructions.append(space.pinabla_coeff @ local)
        return self


def energy_error(mesh, geoms, spaces, coeffs, solution, problem):
    """Relative energy-norm error of the reconstructed solution.

    err^2 = sum_E kappa |grad(u - P u_h)|^2 + tau |beta . grad(u - P u_h)|^2
    normalized by the same quantity with u alone; P is the element H1
    projection.  Requires the exact gradient.
    """
    if problem.exact_grad is None:
        raise ValueError("energy error needs the exact gradient")
    num = 0.0
    den = 0.0
    for c, (geom, space, coef) in enumerate(zip(geoms, spaces, coeffs)):
        local = solution.dofs[solution.system.dofmap.cell_dofs(c)]
        poly = space.pinabla_coeff @ local
        dx, dy = grad_map(space.basis_k)
        sub = MonomialBasis(geom, space.k - 1)
        vals = eval_basis(sub, geom.quad_points)
        gh = np.column_stack([vals.T @ (dx @ poly), vals.T @ (dy @ poly)])
        gu = np.asarray(problem.exact_grad(geom.quad_points), dtype=float)
        bvals = np.asarray(problem.beta(geom.quad_points), dtype=float)
        w = geom.quad_weights
        diff = gu - gh
        num += coef.kappa * np.sum(w * (diff**2).sum(axis=1))
        num += coef.tau * np.sum(w * (bvals * diff).sum(axis=1) ** 2)
        den += coef.kappa * np.sum(w * (gu**2).sum(axis=1))
        den += coef.tau * np.sum(w * (bvals * gu).sum(axis=1) ** 2)
    if den == 0.0:
        raise ValueError("energy error undefined: exact solution has zero energy")
    return float(np.sqrt(num / den))


def export_vtk(solution, mesh, path):
    """Legacy ASCII unstructured-grid file with polygon cells.

    Point data: vertex DOF values ("u_vertex").  Cell data: the H1-projected
    solution at the star centers ("u_pi_center"), the enhancement increment
    ("ell") and the element Peclet number ("peclet").
    """
    lines = [
        "# vtk DataFile Version 3.0",
        "vemsupg solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g} 0")
    size = sum(len(c) + 1 for c in mesh.cells)
    lines.append(f"CELLS {mesh.n_cells} {size}")
    for cell in mesh.cells:
        lines.append(" ".join([str(len(cell))] + [str(v) for v in cell]))
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["7"] * mesh.n_cells)  # VTK_POLYGON
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("SCALARS u_vertex double 1")
    lines.append("LOOKUP_TABLE default")
    for v in solution.dofs[: mesh.n_vertices]:
        lines.append(f"{v:.17g}")
    lines.append(f"CELL_DATA {mesh.n_cells}")
    lines.append("SCALARS u_pi_center double 1")
    lines.append("LOOKUP_TABLE default")
    # the constant-mode coefficient is the projected value at the star center
    for poly in solution.reconstructions:
        lines.append(f"{poly[0]:.17g}")
    lines.append("SCALARS ell int 1")
    lines.append("LOOKUP_TABLE default")
    for e in solution.ell:
        lines.append(str(int(e)))
    lines.append("SCALARS peclet double 1")
    lines.append("LOOKUP_TABLE default")
    for p in solution.peclet:
        lines.append(f"{p:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
