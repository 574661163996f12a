"""Local virtual element spaces: DOF layout and computable projectors.

The local space of order k with enhancement increment ell keeps the standard
VEM degrees of freedom (vertex values, k-1 Gauss-Lobatto values per edge,
scaled moments up to degree k-2) while constraining higher moments to match
the H1-type projection.  That makes the following matrices computable from
DOFs alone:

* ``pinabla_coeff``  DOFs -> P_k coefficients of the H1 projection,
* ``moments``        DOFs -> all L2 moments up to degree k+ell,
* ``pizero_scalar``  DOFs -> P_n coefficients of the L2 projection, n <= k+ell,
* ``pizero_grad``    DOFs -> [P_n]^2 coefficients of the projected gradient,
  n <= k+ell-1.
"""

import numpy as np

from .basis import (
    MonomialBasis,
    eval_basis,
    grad_map,
    laplace_map,
    mass_matrix,
    poly_dim,
)
from .errors import ElementQualityError
from .quadrature import gauss_lobatto_interior

_RCOND_MIN = 1e-14


def _checked_solve(mat, rhs, what, cell):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or 1.0 / cond < _RCOND_MIN:
        raise ElementQualityError(f"singular {what} system (cond={cond:.3e})", cell)
    return np.linalg.solve(mat, rhs)


def _gram_solve(gram, rhs, what, cell):
    """Solve against an SPD Gram matrix with Jacobi equilibration.

    Scaled monomials of high degree produce badly conditioned Gram matrices;
    normalizing rows/columns by the diagonal (unit L2 mass) restores most of
    the lost accuracy.  The conditioning guard applies to the equilibrated
    matrix, where a failure indicates true element degeneracy.
    """
    d = np.sqrt(np.diag(gram))
    if not np.all(d > 0.0):
        raise ElementQualityError(f"non-positive {what} diagonal", cell)
    scaled = gram / np.outer(d, d)
    return _checked_solve(scaled, rhs / d[:, None], what, cell) / d[:, None]


class DofLayout:
    """Numbering of the local DOFs for a polygon with ``n_vertices`` vertices.

    Order: vertex values, then k-1 edge-internal values per edge (ascending
    along the CCW edge direction), then scaled moments in graded-lex order.
    """

    def __init__(self, n_vertices, k):
        if k < 1:
            raise ValueError("order must be >= 1")
        self.k = k
        self.n_vertices = n_vertices
        self.n_edge_internal = k - 1
        self.n_moments = poly_dim(k - 2)
        self.n_dofs = n_vertices * k + self.n_moments
        self.edge_internal_params = gauss_lobatto_interior(k)
        # trace interpolation nodes on [0, 1] for one edge
        self.trace_params = np.concatenate([[0.0], self.edge_internal_params, [1.0]])

    def vertex_dof(self, i):
        return i

    def edge_dofs(self, i):
        base = self.n_vertices + i * self.n_edge_internal
        return list(range(base, base + self.n_edge_internal))

    def moment_dof(self, m):
        return self.n_vertices * self.k + m

    def edge_trace_dofs(self, i):
        """DOF indices of the k+1 trace nodes of edge i, in trace-node order."""
        return [i] + self.edge_dofs(i) + [(i + 1) % self.n_vertices]


def lagrange_values(nodes, params):
    """Values of the Lagrange basis on ``nodes`` at ``params``; shape (np, nn)."""
    nodes = np.asarray(nodes, dtype=float)
    params = np.atleast_1d(np.asarray(params, dtype=float))
    out = np.ones((len(params), len(nodes)))
    for j in range(len(nodes)):
        for i in range(len(nodes)):
            if i != j:
                out[:, j] *= (params - nodes[i]) / (nodes[j] - nodes[i])
    return out


def edge_trace_matrix(layout, edge, params):
    """Map DOFs to trace values on ``edge`` at parameters ``params`` in [0, 1]."""
    vals = lagrange_values(layout.trace_params, params)
    mat = np.zeros((len(np.atleast_1d(params)), layout.n_dofs))
    for col, dof in enumerate(layout.edge_trace_dofs(edge)):
        mat[:, dof] += vals[:, col]
    return mat


def enhancement_degrees(k, ell):
    """Moment degrees constrained through the H1 projection.

    The remaining moments (degrees <= k-2 when k >= 2) are genuine DOFs; the
    exclusive lower bound keeps the DOF set unisolvent.  For k = 1 every
    degree from 0 to 1+ell is constrained.
    """
    lo = k - 1 if k >= 2 else 0
    return range(lo, k + ell + 1)


def build_pinabla(geom, k, layout=None):
    """H1-type projector of order k on one element.

    Returns (coeff, dof_form, basis) where ``coeff`` maps DOFs to P_k
    coefficients and ``dof_form`` maps DOFs to the DOFs of the projected
    polynomial.  The Gram system is augmented by the boundary mean (k = 1)
    or the cell mean (k > 1).
    """
    if layout is None:
        layout = DofLayout(geom.n_vertices, k)
    basis = MonomialBasis(geom, k)
    nk = basis.dim
    n = layout.n_dofs

    # stiffness Gram via exact derivative maps
    basis_km1 = MonomialBasis(geom, k - 1)
    h_km1 = mass_matrix(basis_km1)
    dx, dy = grad_map(basis)
    gram = dx.T @ h_km1 @ dx + dy.T @ h_km1 @ dy

    # right-hand sides by integration by parts
    rhs = np.zeros((nk, n))
    for e in range(geom.n_vertices):
        pts = geom.edge_points[e]
        w = geom.edge_weights[e]
        normal = geom.edge_normals[e]
        trace = edge_trace_matrix(layout, e, geom.edge_params)
        mvals = eval_basis(basis_km1, pts)
        dvals = normal[0] * (dx.T @ mvals) + normal[1] * (dy.T @ mvals)
        rhs += (dvals * w) @ trace
    if k >= 2:
        lap = laplace_map(basis)
        for m in range(layout.n_moments):
            rhs[:, layout.moment_dof(m)] -= geom.area * lap[m, :]

    # mean condition replaces the constant row
    h_k = mass_matrix(basis)
    if k == 1:
        mean_row = np.zeros(nk)
        mean_rhs = np.zeros(n)
        for e in range(geom.n_vertices):
            w = geom.edge_weights[e]
            mean_row += eval_basis(basis, geom.edge_points[e]) @ w
            mean_rhs += w @ edge_trace_matrix(layout, e, geom.edge_params)
        mean_row /= geom.perimeter
        mean_rhs /= geom.perimeter
    else:
        mean_row = h_k[0, :] / geom.area
        mean_rhs = np.zeros(n)
        mean_rhs[layout.moment_dof(0)] = 1.0
    gram[0, :] = mean_row
    rhs[0, :] = mean_rhs

    coeff = _checked_solve(gram, rhs, "projector Gram", geom.cell)

    # DOFs of the projected polynomial
    dof_of_poly = np.zeros((n, nk))
    dof_of_poly[:geom.n_vertices, :] = eval_basis(basis, geom.vertices).T
    for e in range(geom.n_vertices):
        if layout.n_edge_internal:
            pts = geom.vertices[e] + np.outer(
                layout.edge_internal_params,
                geom.vertices[(e + 1) % geom.n_vertices] - geom.vertices[e],
            )
            dof_of_poly[layout.edge_dofs(e), :] = eval_basis(basis, pts).T
    for m in range(layout.n_moments):
        dof_of_poly[layout.moment_dof(m), :] = h_k[m, :] / geom.area
    return coeff, dof_of_poly @ coeff, basis


def build_moments(geom, k, ell, pinabla_coeff, layout=None):
    """Moments (phi_i, m_a) for all |a| <= k + ell.

    Low-degree rows come straight from the moment DOFs; the constrained
    degrees use the enhancement property through the H1 projection.
    """
    if layout is None:
        layout = DofLayout(geom.n_vertices, k)
    basis_full = MonomialBasis(geom, k + ell)
    h_full = mass_matrix(basis_full)
    nk = poly_dim(k)
    moments = np.zeros((basis_full.dim, layout.n_dofs))
    for m in range(layout.n_moments):
        moments[m, layout.moment_dof(m)] = geom.area
    degrees = basis_full.degrees()
    rows = np.isin(degrees, list(enhancement_degrees(k, ell)))
    moments[rows, :] = h_full[np.ix_(rows, range(nk))] @ pinabla_coeff
    return moments, basis_full, h_full


def build_pizero_scalar(geom, n, moments, h_full, cell=None):
    """L2 projector onto P_n from the moment matrix (requires n <= k + ell)."""
    m = poly_dim(n)
    if m > moments.shape[0]:
        raise ValueError("moments not built to the requested degree")
    return _gram_solve(h_full[:m, :m], moments[:m, :], "mass", cell)


def build_pizero_grad(geom, k, ell, moments, basis_full, h_full, degree, layout=None):
    """L2 projection of the gradient onto [P_degree]^2, degree <= k + ell - 1.

    Each component row is assembled by parts: the interior term uses the
    moment matrix, the boundary term exact edge quadrature of the trace.
    Returns (gx, gy), each mapping DOFs to P_degree coefficients.
    """
    if layout is None:
        layout = DofLayout(geom.n_vertices, k)
    if degree > k + ell - 1:
        raise ValueError("gradient projection degree exceeds k + ell - 1")
    mg = poly_dim(degree)
    sub = MonomialBasis(geom, degree)
    dx, dy = grad_map(sub)
    rx = -(dx.T @ moments[: poly_dim(degree - 1), :])
    ry = -(dy.T @ moments[: poly_dim(degree - 1), :])
    for e in range(geom.n_vertices):
        pts = geom.edge_points[e]
        w = geom.edge_weights[e]
        normal = geom.edge_normals[e]
        trace = edge_trace_matrix(layout, e, geom.edge_params)
        mvals = eval_basis(sub, pts)
        rx += normal[0] * (mvals * w) @ trace
        ry += normal[1] * (mvals * w) @ trace
    h_sub = h_full[:mg, :mg]
    gx = _gram_solve(h_sub, rx, "vector mass", geom.cell)
    gy = _gram_solve(h_sub, ry, "vector mass", geom.cell)
    return gx, gy


class LocalSpace:
    """All computable projector matrices of one element for fixed (k, ell)."""

    def __init__(self, geom, k, ell):
        if ell < 0:
            raise ValueError("enhancement increment must be >= 0")
        need = 2 * (k + ell)
        if geom.exact_degree < need:
            raise ValueError(
                f"geometry quadrature exact to {geom.exact_degree}, "
                f"order {k} with increment {ell} needs {need}"
            )
        self.geom = geom
        self.k = k
        self.ell = ell
        self.layout = DofLayout(geom.n_vertices, k)
        self.pinabla_coeff, self.pinabla_dof, self.basis_k = build_pinabla(
            geom, k, self.layout
        )
        self.moments, self.basis_full, self.h_full = build_moments(
            geom, k, ell, self.pinabla_coeff, self.layout
        )
        self._pizero_scalar = {}
        self._pizero_grad = {}

    @property
    def n_dofs(self):
        return self.layout.n_dofs

    def translated(self, new_geom):
        """View of this space on a translated copy of the element.

        Every projector matrix is translation-invariant (all integrals are
        taken in star-centered scaled coordinates), so matrices and caches
        are shared; only geometry and basis anchors are rebound.
        """
        new = object.__new__(LocalSpace)
        new.__dict__.update(self.__dict__)
        new.geom = new_geom
        new.basis_k = MonomialBasis(new_geom, self.k)
        new.basis_full = MonomialBasis(new_geom, self.k + self.ell)
        return new

    def pizero_scalar(self, n):
        if n not in self._pizero_scalar:
            self._pizero_scalar[n] = build_pizero_scalar(
                self.geom, n, self.moments, self.h_full, self.geom.cell
            )
        return self._pizero_scalar[n]

    def pizero_grad(self, degree):
        if degree not in self._pizero_grad:
            self._pizero_grad[degree] = build_pizero_grad(
                self.geom,
                self.k,
                self.ell,
                self.moments,
                self.basis_full,
                self.h_full,
                degree,
                self.layout,
            )
        return self._pizero_grad[degree]

    def mass_block(self, n):
        """Gram matrix of the monomials up to degree n (principal block)."""
        m = poly_dim(n)
        return self.h_full[:m, :m]

    def polynomial_dofs(self, coeffs):
        """Exact DOF vector of a polynomial given by P_k coefficients."""
        geom, layout = self.geom, self.layout
        dofs = np.zeros(layout.n_dofs)
        vals = eval_basis(self.basis_k, geom.vertices)
        dofs[: geom.n_vertices] = coeffs @ vals
        for e in range(geom.n_vertices):
            if layout.n_edge_internal:
                pts = geom.vertices[e] + np.outer(
                    layout.edge_internal_params,
                    geom.vertices[(e + 1) % geom.n_vertices] - geom.vertices[e],
                )
                dofs[layout.edge_dofs(e)] = coeffs @ eval_basis(self.basis_k, pts)
        nk = self.basis_k.dim
        for m in range(layout.n_moments):
            dofs[layout.moment_dof(m)] = (self.h_full[m, :nk] @ coeffs) / geom.area
        return dofs

    def interpolate(self, func):
        """DOF vector of a smooth function (vertex/edge values, quadrature moments)."""
        geom, layout = self.geom, self.layout
        dofs = np.zeros(layout.n_dofs)
        dofs[: geom.n_vertices] = func(geom.vertices)
        for e in range(geom.n_vertices):
            if layout.n_edge_internal:
                pts = geom.vertices[e] + np.outer(
                    layout.edge_internal_params,
                    geom.vertices[(e + 1) % geom.n_vertices] - geom.vertices[e],
                )
                dofs[layout.edge_dofs(e)] = func(pts)
        if layout.n_moments:
            fvals = func(geom.quad_points)
            basis_m = MonomialBasis(geom, self.k - 2)
            mvals = eval_basis(basis_m, geom.quad_points)
            dofs[layout.n_vertices * self.k :] = (
                mvals @ (geom.quad_weights * fvals)
            ) / geom.area
        return dofs
