"""Scaled monomial bases on polygonal elements.

A basis member with exponent pair (a1, a2) is
``((x - xc)/h)**a1 * ((y - yc)/h)**a2`` where (xc, yc) is the element star
center and h its diameter.  Members are ordered graded-lexicographically:
degree blocks in increasing total degree, x-power descending inside a block.
Derivatives act on coefficient vectors as exact linear maps between bases.
"""

import numpy as np


def poly_dim(n):
    """Dimension of the polynomial space of total degree <= n (0 for n < 0)."""
    if n < 0:
        return 0
    return (n + 1) * (n + 2) // 2


def monomial_exponents(n):
    """Exponent pairs of the degree-n basis in graded-lex order, shape (dim, 2)."""
    exps = [(d - j, j) for d in range(n + 1) for j in range(d + 1)]
    return np.array(exps, dtype=int).reshape(-1, 2)


def monomial_index(a1, a2):
    """Position of exponent (a1, a2) in graded-lex order."""
    d = a1 + a2
    return d * (d + 1) // 2 + a2


class MonomialBasis:
    """Scaled monomials of total degree <= order on one element.

    Parameters
    ----------
    geom : ElementGeometry
        Element providing the star center, diameter and quadrature.
    order : int
        Maximal total degree.
    """

    def __init__(self, geom, order):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.geom = geom
        self.order = order
        self.center = np.asarray(geom.star_center, dtype=float)
        self.scale = float(geom.h)
        self.exponents = monomial_exponents(order)
        self.dim = poly_dim(order)

    def degrees(self):
        """Total degree of each member, shape (dim,)."""
        return self.exponents.sum(axis=1)


def eval_basis(basis, points):
    """Evaluate all basis members at ``points`` (n, 2); returns (dim, n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xi = (pts[:, 0] - basis.center[0]) / basis.scale
    eta = (pts[:, 1] - basis.center[1]) / basis.scale
    a = basis.exponents
    return xi[None, :] ** a[:, 0, None] * eta[None, :] ** a[:, 1, None]


def eval_poly(basis, coeffs, points):
    """Evaluate the polynomial with coefficient vector(s) ``coeffs`` at points.

    ``coeffs`` may be (dim,) or (dim, m); returns (n,) or (m, n) values.
    """
    vals = eval_basis(basis, points)
    return np.asarray(coeffs).T @ vals


def grad_map(basis):
    """Coefficient maps of d/dx and d/dy from P_n to P_{n-1}.

    Returns (Dx, Dy), each of shape (dim P_{n-1}, dim P_n), carrying the
    1/h chain factor of the scaled coordinates.
    """
    n = basis.order
    rows = poly_dim(n - 1)
    dx = np.zeros((rows, basis.dim))
    dy = np.zeros((rows, basis.dim))
    inv_h = 1.0 / basis.scale
    for col, (a1, a2) in enumerate(basis.exponents):
        if a1 > 0:
            dx[monomial_index(a1 - 1, a2), col] = a1 * inv_h
        if a2 > 0:
            dy[monomial_index(a1, a2 - 1), col] = a2 * inv_h
    return dx, dy


def laplace_map(basis):
    """Coefficient map of the Laplacian from P_n to P_{n-2}."""
    n = basis.order
    rows = poly_dim(n - 2)
    lap = np.zeros((rows, basis.dim))
    inv_h2 = 1.0 / basis.scale**2
    for col, (a1, a2) in enumerate(basis.exponents):
        if a1 > 1:
            lap[monomial_index(a1 - 2, a2), col] += a1 * (a1 - 1) * inv_h2
        if a2 > 1:
            lap[monomial_index(a1, a2 - 2), col] += a2 * (a2 - 1) * inv_h2
    return lap


def div_map(basis):
    """Coefficient map of the divergence from [P_n]^2 to P_{n-1}.

    Acts on stacked vector coefficients [x-component; y-component].
    """
    dx, dy = grad_map(basis)
    return np.hstack([dx, dy])


def mass_matrix(basis):
    """Gram matrix H_ab = integral of m_a m_b over the element.

    Symmetric positive definite; requires element quadrature exact to
    degree 2n, checked against the geometry's declared exactness.
    """
    geom = basis.geom
    if geom.exact_degree < 2 * basis.order:
        raise ValueError(
            f"element quadrature exact to degree {geom.exact_degree}, "
            f"mass matrix of order {basis.order} needs {2 * basis.order}"
        )
    vals = eval_basis(basis, geom.quad_points)
    return (vals * geom.quad_weights) @ vals.T


def vector_mass_matrix(basis):
    """Block-diagonal Gram of [P_n]^2 in stacked component order."""
    h = mass_matrix(basis)
    z = np.zeros_like(h)
    return np.block([[h, z], [z, h]])


def mass_condition(basis):
    """Spectral condition number of the element Gram matrix (diagnostic only)."""
    return float(np.linalg.cond(mass_matrix(basis)))
