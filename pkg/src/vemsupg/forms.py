"""SUPG coefficients and local discrete forms.

The stabilization-free scheme discretizes diffusion with the degree
k+ell-1 projected gradient and adds the streamline term weighted by the
element parameter tau; no extra stabilizing bilinear form is needed once
the increment ell makes the projected-gradient Gram matrix coercive.  The
classical comparison scheme keeps the degree k-1 projections everywhere
and restores coercivity with the usual dof-dof stabilization.
"""

import numpy as np
from scipy.linalg import eigh

from .basis import MonomialBasis, div_map, eval_basis, grad_map, laplace_map, mass_matrix
from .errors import ProbeError
from .space import LocalSpace

DEFAULT_PROBE_TOL = 1e-8
DEFAULT_ELL_MAX = 6


class ProblemData:
    """Coefficients, data and (optionally) the exact solution of one problem.

    Parameters
    ----------
    kappa : positive diffusivity
    beta : constant 2-vector or callable points (n, 2) -> (n, 2)
    source : callable points -> values (the right-hand side f)
    dirichlet : dict mapping boundary label -> callable points -> values;
        the key "*" is a wildcard fallback
    label_priority : labels in decreasing priority, breaking ties where two
        differently-labelled edges share a vertex
    exact, exact_grad : optional exact solution and gradient callables
    boundary_classifier : optional callable (p0, p1, old_label) -> label used
        to re-tag boundary edges before assembly
    """

    def __init__(self, kappa, beta, source, dirichlet, label_priority=(),
                 exact=None, exact_grad=None, boundary_classifier=None, name=""):
        if kappa <= 0:
            raise ValueError("diffusivity must be positive")
        self.kappa = float(kappa)
        if callable(beta):
            self.beta = beta
            self.beta_constant = None
        else:
            const = np.asarray(beta, dtype=float)
            self.beta = lambda pts: np.broadcast_to(const, (len(np.atleast_2d(pts)), 2))
            self.beta_constant = const
        self.source = source
        self.dirichlet = dict(dirichlet)
        self.label_priority = list(label_priority)
        self.exact = exact
        self.exact_grad = exact_grad
        self.boundary_classifier = boundary_classifier
        self.name = name

    def dirichlet_for(self, label):
        if label in self.dirichlet:
            return self.dirichlet[label]
        if "*" in self.dirichlet:
            return self.dirichlet["*"]
        return None

    def label_rank(self, label):
        try:
            return self.label_priority.index(label)
        except ValueError:
            return len(self.label_priority)


class ElementCoefficients:
    """Per-element SUPG data: local velocity bound, Peclet number and tau."""

    def __init__(self, kappa, beta_sup, peclet, tau, m_k, c_tilde=None):
        self.kappa = kappa
        self.beta_sup = beta_sup
        self.peclet = peclet
        self.tau = tau
        self.m_k = m_k
        self.c_tilde = c_tilde

    def diffusion_tensor(self, beta):
        """SPD tensor kappa I + tau beta beta^T at one velocity sample."""
        beta = np.asarray(beta, dtype=float)
        return self.kappa * np.eye(2) + self.tau * np.outer(beta, beta)


class LocalForms:
    """Local matrices of one element over its DOF basis."""

    def __init__(self, a, b, d, rhs, probe_gram=None, stab=None):
        self.a = a
        self.b = b
        self.d = d
        self.rhs = rhs
        self.probe_gram = probe_gram
        self.stab = stab

    @property
    def full(self):
        return self.a + self.b + self.d


def beta_sup(geom, beta):
    """Largest |beta| sampled over the element's volume and edge quadrature."""
    pts = np.vstack([geom.quad_points] + list(geom.edge_points))
    vals = np.asarray(beta(pts), dtype=float)
    return float(np.hypot(vals[:, 0], vals[:, 1]).max())


def tilde_c_k(geom, k):
    """Largest c with c h^2 |lap p|^2 <= |grad p|^2 over P_k (k > 1).

    Computed from the pencil of the gradient and h^2-scaled Laplacian Gram
    matrices; harmonic polynomials (the Laplacian kernel) are eliminated by
    minimizing the gradient energy over them, so the value is a true bound
    for every polynomial with a nonzero Laplacian.
    """
    if k <= 1:
        raise ValueError("inverse-inequality constant defined only for k > 1")
    basis = MonomialBasis(geom, k)
    dx, dy = grad_map(basis)
    h_km1 = mass_matrix(MonomialBasis(geom, k - 1))
    s = dx.T @ h_km1 @ dx + dy.T @ h_km1 @ dy
    lap = laplace_map(basis)
    h_km2 = mass_matrix(MonomialBasis(geom, k - 2))
    l = geom.h**2 * (lap.T @ h_km2 @ lap)

    lam, vec = eigh(l)
    keep = lam > 1e-12 * lam[-1]
    vr = vec[:, keep]
    vk = vec[:, ~keep]
    s_rr = vr.T @ s @ vr
    s_rk = vr.T @ s @ vk
    s_kk = vk.T @ s @ vk
    schur = s_rr - s_rk @ np.linalg.pinv(s_kk, rcond=1e-12) @ s_rk.T
    mu = eigh(schur, np.diag(lam[keep]), eigvals_only=True)
    return float(mu[0])


def peclet_tau(geom, kappa, beta_e, k, c_tilde=None):
    """Element Peclet number and SUPG weight tau.

    Pe = m_k beta_e h / kappa with m_1 = 1/3 and m_k = 2 c_tilde for k > 1;
    tau = h/(2 beta_e) min(1, Pe).  A vanishing velocity gives (0, 0), which
    turns all streamline terms off.
    """
    if kappa <= 0:
        raise ValueError("diffusivity must be positive")
    if k == 1:
        m_k = 1.0 / 3.0
    else:
        if c_tilde is None:
            c_tilde = tilde_c_k(geom, k)
        m_k = 2.0 * c_tilde
    if beta_e == 0.0:
        return 0.0, 0.0, m_k
    pe = m_k * beta_e * geom.h / kappa
    tau = geom.h / (2.0 * beta_e) * min(1.0, pe)
    return pe, tau, m_k


def element_coefficients(geom, problem, k):
    """Bundle beta bound, Peclet number and tau for one element."""
    b_e = beta_sup(geom, problem.beta)
    c_t = tilde_c_k(geom, k) if k > 1 else None
    pe, tau, m_k = peclet_tau(geom, problem.kappa, b_e, k, c_t)
    return ElementCoefficients(problem.kappa, b_e, pe, tau, m_k, c_t)


def projected_gradient_gram(space):
    """Gram matrix of the degree k+ell-1 projected gradients of the DOF basis."""
    degree = space.k + space.ell - 1
    gx, gy = space.pizero_grad(degree)
    h = space.mass_block(degree)
    return gx.T @ h @ gx + gy.T @ h @ gy


def probe_min_ell(geom, k, ell_max=DEFAULT_ELL_MAX, tol_rel=DEFAULT_PROBE_TOL):
    """Smallest increment whose projected-gradient Gram has a 1-dim kernel.

    The Gram always annihilates constants; the probe accepts the first ell
    for which exactly one relative eigenvalue stays below ``tol_rel``.  The
    geometry must carry quadrature exact to degree 2 (k + ell_max).
    """
    if geom.exact_degree < 2 * (k + ell_max):
        raise ValueError("geometry quadrature too weak for the probe cap")
    trace = []
    for ell in range(ell_max + 1):
        space = LocalSpace(geom, k, ell)
        gram = projected_gradient_gram(space)
        lam = np.linalg.eigvalsh(0.5 * (gram + gram.T))
        lam_max = lam[-1]
        if lam_max <= 0.0:
            trace.append((ell, lam.tolist()))
            continue
        n_small = int(np.sum(lam < tol_rel * lam_max))
        trace.append((ell, (lam / lam_max).tolist()))
        if n_small == 1:
            return ell
    raise ProbeError(
        f"no increment <= {ell_max} makes the local form coercive (order {k})",
        trace=trace,
        cell=geom.cell,
    )


def _beta_at(problem, pts):
    return np.asarray(problem.beta(pts), dtype=float)


def _grad_values(space, degree, pts):
    """Projected-gradient values of every DOF basis function at ``pts``."""
    gx, gy = space.pizero_grad(degree)
    vals = eval_basis(MonomialBasis(space.geom, degree), pts)
    return vals.T @ gx, vals.T @ gy


def local_a_h(geom, space, coeffs, problem):
    """Diffusion plus streamline-streamline term, no added stabilization."""
    degree = space.k + space.ell - 1
    gx, gy = space.pizero_grad(degree)
    h = space.mass_block(degree)
    a = coeffs.kappa * (gx.T @ h @ gx + gy.T @ h @ gy)
    if coeffs.tau > 0.0:
        bvals = _beta_at(problem, geom.quad_points)
        vx, vy = _grad_values(space, degree, geom.quad_points)
        s = bvals[:, :1] * vx + bvals[:, 1:] * vy
        a = a + coeffs.tau * (s.T @ (geom.quad_weights[:, None] * s))
    return a


def local_b_h(geom, space, coeffs, problem):
    """Transport term tested against the degree k-1 scalar projection."""
    low = space.k - 1
    proj_v = space.pizero_scalar(low)
    mvals = eval_basis(MonomialBasis(geom, low), geom.quad_points)
    tvals = mvals.T @ proj_v
    bvals = _beta_at(problem, geom.quad_points)
    vx, vy = _grad_values(space, low, geom.quad_points)
    s = bvals[:, :1] * vx + bvals[:, 1:] * vy
    return tvals.T @ (geom.quad_weights[:, None] * s)


def local_d_h(geom, space, coeffs, problem):
    """SUPG consistency term with the Laplacian of the projected gradient."""
    n = space.n_dofs
    if coeffs.tau == 0.0 or space.k == 1:
        return np.zeros((n, n))
    low = space.k - 1
    gx, gy = space.pizero_grad(low)
    div = div_map(MonomialBasis(geom, low)) @ np.vstack([gx, gy])
    dvals = eval_basis(MonomialBasis(geom, low - 1), geom.quad_points).T @ div
    bvals = _beta_at(problem, geom.quad_points)
    vx, vy = _grad_values(space, space.k + space.ell - 1, geom.quad_points)
    s = bvals[:, :1] * vx + bvals[:, 1:] * vy
    return -coeffs.tau * coeffs.kappa * (s.T @ (geom.quad_weights[:, None] * dvals))


def local_rhs(geom, space, coeffs, problem):
    """Load vector (f, projected v + tau beta . projected grad v)."""
    fvals = np.asarray(problem.source(geom.quad_points), dtype=float)
    low = space.k - 1
    proj_v = space.pizero_scalar(low)
    tvals = eval_basis(MonomialBasis(geom, low), geom.quad_points).T @ proj_v
    test = tvals
    if coeffs.tau > 0.0:
        bvals = _beta_at(problem, geom.quad_points)
        vx, vy = _grad_values(space, space.k + space.ell - 1, geom.quad_points)
        test = tvals + coeffs.tau * (bvals[:, :1] * vx + bvals[:, 1:] * vy)
    return test.T @ (geom.quad_weights * fvals)


def sf_forms(geom, space, coeffs, problem):
    """All stabilization-free local forms of one element."""
    return LocalForms(
        a=local_a_h(geom, space, coeffs, problem),
        b=local_b_h(geom, space, coeffs, problem),
        d=local_d_h(geom, space, coeffs, problem),
        rhs=local_rhs(geom, space, coeffs, problem),
        probe_gram=projected_gradient_gram(space),
    )


def baseline_vem_forms(geom, space, coeffs, problem, sigma=None):
    """Classical VEM-SUPG forms on the standard (ell = 0) space.

    Diffusion and streamline terms use the degree k-1 projected gradient in
    both slots; coercivity comes from the dof-dof stabilization of the H1
    projection residual, scaled by sigma = kappa + tau beta_sup^2.
    """
    if space.ell != 0:
        raise ValueError("baseline forms require the standard space (ell = 0)")
    if sigma is None:
        sigma = coeffs.kappa + coeffs.tau * coeffs.beta_sup**2
    low = space.k - 1
    gx, gy = space.pizero_grad(low)
    h = space.mass_block(low)
    a = coeffs.kappa * (gx.T @ h @ gx + gy.T @ h @ gy)
    if coeffs.tau > 0.0:
        bvals = _beta_at(problem, geom.quad_points)
        vx, vy = _grad_values(space, low, geom.quad_points)
        s = bvals[:, :1] * vx + bvals[:, 1:] * vy
        a = a + coeffs.tau * (s.T @ (geom.quad_weights[:, None] * s))
    resid = np.eye(space.n_dofs) - space.pinabla_dof
    stab = sigma * (resid.T @ resid)
    return LocalForms(
        a=a + stab,
        b=local_b_h(geom, space, coeffs, problem),
        d=local_d_h(geom, space, coeffs, problem),
        rhs=local_rhs(geom, space, coeffs, problem),
        probe_gram=gx.T @ h @ gx + gy.T @ h @ gy,
        stab=stab,
    )
