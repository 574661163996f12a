"""Polygon geometry: kernels, star centers, and per-element quadrature.

An element's star center is the Chebyshev center of its kernel (the set of
points that see the whole boundary), so concave star-shaped cells are handled
the same way as convex ones.  All element integrals run over a fan
sub-triangulation rooted at that center.
"""

import numpy as np
from scipy.optimize import linprog

from .errors import ElementQualityError
from .quadrature import edge_rule, map_rule_to_triangle, triangle_rule

_KERNEL_EPS = 1e-12


def polygon_signed_area(vertices):
    """Shoelace signed area; positive for counter-clockwise order."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(vertices):
    """Area centroid of a simple polygon."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def polygon_diameter(vertices):
    """Largest vertex-to-vertex distance."""
    v = np.asarray(vertices, dtype=float)
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2).max()))


def polygon_is_simple(vertices):
    """True if no two non-adjacent edges intersect."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)

    def cross2(u, w):
        return u[0] * w[1] - u[1] * w[0]

    def segs_cross(p, q, r, s):
        d1 = cross2(q - p, r - p)
        d2 = cross2(q - p, s - p)
        d3 = cross2(s - r, p - r)
        d4 = cross2(s - r, q - r)
        return (d1 * d2 < 0) and (d3 * d4 < 0)

    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segs_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


def polygon_kernel(vertices):
    """Kernel of a CCW polygon by half-plane clipping of its bounding box.

    Returns the kernel polygon (m, 2) or None when it is empty.
    """
    v = np.asarray(vertices, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    pad = 0.5 * max(hi - lo)
    poly = np.array(
        [
            [lo[0] - pad, lo[1] - pad],
            [hi[0] + pad, lo[1] - pad],
            [hi[0] + pad, hi[1] + pad],
            [lo[0] - pad, hi[1] + pad],
        ]
    )
    n = len(v)
    scale = polygon_diameter(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        d = b - a
        poly = _clip_half_plane(poly, a, d, scale)
        if poly is None:
            return None
    return poly


def _clip_half_plane(poly, a, d, scale):
    """Clip convex ``poly`` to the half-plane left of the ray a + t*d."""
    cut = -_KERNEL_EPS * scale * np.hypot(*d)
    out = []
    m = len(poly)
    rel = poly - a
    side = d[0] * rel[:, 1] - d[1] * rel[:, 0]
    for i in range(m):
        j = (i + 1) % m
        if side[i] >= cut:
            out.append(poly[i])
        if (side[i] > cut > side[j]) or (side[j] > cut > side[i]):
            t = (side[i] - cut) / (side[i] - side[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    if len(out) < 3:
        return None
    return np.asarray(out)


def chebyshev_center(convex_vertices):
    """Center and radius of the largest circle inscribed in a convex polygon."""
    v = np.asarray(convex_vertices, dtype=float)
    n = len(v)
    norms = []
    offsets = []
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        d = b - a
        ln = np.hypot(*d)
        if ln == 0.0:
            continue
        nrm = np.array([d[1], -d[0]]) / ln  # outward for CCW
        norms.append(nrm)
        offsets.append(nrm @ a)
    norms = np.asarray(norms)
    offsets = np.asarray(offsets)
    # maximize r subject to n_i . c + r <= n_i . a_i
    a_ub = np.column_stack([norms, np.ones(len(norms))])
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=a_ub,
        b_ub=offsets,
        bounds=[(None, None), (None, None), (0.0, None)],
        method="highs",
    )
    if not res.success:
        raise ElementQualityError(f"Chebyshev center LP failed: {res.message}")
    return res.x[:2].copy(), float(res.x[2])


def star_center(vertices):
    """Kernel Chebyshev center and kernel-ball radius of a star-shaped polygon.

    Raises ElementQualityError when the kernel is empty (non-star cell).
    """
    kernel = polygon_kernel(vertices)
    if kernel is None:
        raise ElementQualityError("polygon is not star-shaped (empty kernel)")
    center, radius = chebyshev_center(kernel)
    if radius <= _KERNEL_EPS * polygon_diameter(vertices):
        raise ElementQualityError("polygon kernel is degenerate")
    return center, radius


class ElementGeometry:
    """Per-element geometric data and quadrature.

    Attributes
    ----------
    vertices : (nv, 2) array, CCW
    h : diameter
    area : polygon area
    star_center : kernel Chebyshev center (x_E, y_E)
    kernel_radius : inscribed-circle radius of the kernel
    edge_lengths, edge_normals, edge_tangents : per-edge data (outward normals)
    triangles : (nv, 3, 2) fan sub-triangulation from the star center
    quad_points, quad_weights : volume rule, exact to ``exact_degree``
    edge_points, edge_weights, edge_params : per-edge Gauss rules
    """

    def __init__(self, vertices, exact_degree, n_edge_points, cell=None):
        v = np.asarray(vertices, dtype=float)
        if len(v) < 3:
            raise ElementQualityError("polygon needs at least 3 vertices", cell)
        area = polygon_signed_area(v)
        if area <= 0.0:
            raise ElementQualityError("polygon is not counter-clockwise", cell)
        self.cell = cell
        self.vertices = v
        self.n_vertices = len(v)
        self.area = area
        self.h = polygon_diameter(v)
        try:
            self.star_center, self.kernel_radius = star_center(v)
        except ElementQualityError as exc:
            raise ElementQualityError(str(exc), cell) from None
        self.exact_degree = int(exact_degree)
        self.n_edge_points = int(n_edge_points)

        nxt = np.roll(v, -1, axis=0)
        tang = nxt - v
        self.edge_lengths = np.hypot(tang[:, 0], tang[:, 1])
        self.edge_tangents = tang / self.edge_lengths[:, None]
        self.edge_normals = np.column_stack(
            [self.edge_tangents[:, 1], -self.edge_tangents[:, 0]]
        )

        self.triangles = np.stack(
            [np.broadcast_to(self.star_center, v.shape), v, nxt], axis=1
        )
        ref_p, ref_w = triangle_rule(self.exact_degree)
        pts, wts = [], []
        for tri in self.triangles:
            p, w = map_rule_to_triangle(ref_p, ref_w, tri)
            pts.append(p)
            wts.append(w)
        self.quad_points = np.vstack(pts)
        self.quad_weights = np.concatenate(wts)

        self.edge_points = []
        self.edge_weights = []
        self.edge_params = None
        for i in range(self.n_vertices):
            p, w, t = edge_rule(v[i], nxt[i], self.n_edge_points)
            self.edge_points.append(p)
            self.edge_weights.append(w)
            self.edge_params = t  # identical params on every edge
        self.perimeter = float(self.edge_lengths.sum())

    def translated(self, delta, cell=None):
        """Copy of this geometry shifted by ``delta`` (shape data shared)."""
        new = object.__new__(ElementGeometry)
        new.__dict__.update(self.__dict__)
        delta = np.asarray(delta, dtype=float)
        new.cell = self.cell if cell is None else cell
        new.vertices = self.vertices + delta
        new.star_center = self.star_center + delta
        new.triangles = self.triangles + delta
        new.quad_points = self.quad_points + delta
        new.edge_points = [p + delta for p in self.edge_points]
        return new


def element_geometry(mesh, cell, k=1, ell=0, exact_degree=None, n_edge_points=None):
    """Geometry of one mesh cell with quadrature sized for order k and increment ell.

    The volume rule is exact to degree 2(k+ell)+2 and edge rules use
    k+ell+1 Gauss points, unless explicitly overridden.
    """
    if exact_degree is None:
        exact_degree = 2 * (k + ell) + 2
    if n_edge_points is None:
        n_edge_points = k + ell + 1
    verts = mesh.vertices[mesh.cells[cell]]
    return ElementGeometry(verts, exact_degree, n_edge_points, cell=cell)
