"""NumPy (einsum) implementation of the element kernels.

Shared array contract with the compiled backend:
  p2    (nq, 6)        quadratic basis values at quadrature points
  gphys (nt, nq, 6, 2) physical basis gradients
  wdet  (nt, nq)       quadrature weight times Jacobian determinant
  p1    (nq, 3)        linear basis values
Nodal data (transport fields etc.) arrives gathered per element.
"""

import numpy as np


def stiffness_elems(gphys, wdet):
    """Per-element scalar stiffness: int grad(phi_i) . grad(phi_j)."""
    return np.einsum("tq,tqid,tqjd->tij", wdet, gphys, gphys, optimize=True)


def mass_elems(p2, wdet):
    """Per-element scalar mass: int phi_i phi_j."""
    return np.einsum("tq,qi,qj->tij", wdet, p2, p2, optimize=True)


def divergence_elems(p1, gphys, wdet):
    """Per-element pairing int psi_k d(phi_j)/dx_c, shape (nt, 3, 6, 2)."""
    return np.einsum("tq,qk,tqjc->tkjc", wdet, p1, gphys, optimize=True)


def load_elems(p2, wdet, fvals):
    """Per-element load int f_c phi_i for f sampled at quadrature points.

    fvals has shape (nt, nq, 2); returns (nt, 6, 2).
    """
    return np.einsum("tq,tqc,qi->tic", wdet, fvals, p2, optimize=True)


def convection_elems(p2, gphys, wdet, a_elem):
    """Per-element transport block int (a . grad phi_j) phi_i, shape (nt, 6, 6).

    a_elem holds nodal transport values, shape (nt, 6, 2).
    """
    a_q = np.einsum("qi,tic->tqc", p2, a_elem, optimize=True)
    adg = np.einsum("tqc,tqjc->tqj", a_q, gphys, optimize=True)
    return np.einsum("tq,qi,tqj->tij", wdet, p2, adg, optimize=True)


def grad_coupling_elems(p2, gphys, wdet, u_elem):
    """Per-element int phi_j (d u_c / d x_d) phi_i, shape (nt, 6, 2, 6, 2).

    Row index (i, c) tests component c; column (j, d) carries the direction
    of the perturbation.  u_elem holds nodal values of the frozen field.
    """
    grad_u = np.einsum("tic,tqid->tqcd", u_elem, gphys, optimize=True)
    return np.einsum("tq,qi,tqcd,qj->ticjd", wdet, p2, grad_u, p2, optimize=True)


def gradtest_coupling_elems(p2, gphys, wdet, u_elem):
    """Per-element int phi_j (d phi_i / d x_d) u_c, shape (nt, 6, 2, 6, 2)."""
    u_q = np.einsum("qi,tic->tqc", p2, u_elem, optimize=True)
    return np.einsum("tq,tqid,tqc,qj->ticjd", wdet, gphys, u_q, p2, optimize=True)


def l4_value_grad(p2, wdet, v_elem):
    """Quartic integral int |v|^4 and its nodal gradient.

    Returns (value, grad) with grad of shape (nt, 6, 2); the gradient
    entries are 4 int |v|^2 v_c phi_i per element node.
    """
    v_q = np.einsum("qi,tic->tqc", p2, v_elem, optimize=True)
    v2 = np.einsum("tqc,tqc->tq", v_q, v_q, optimize=True)
    value = float(np.einsum("tq,tq->", wdet, v2 * v2, optimize=True))
    grad = 4.0 * np.einsum("tq,tq,tqc,qi->tic", wdet, v2, v_q, p2, optimize=True)
    return value, grad
