"""The sl(2,C)-valued 1-form of the construction and its vector densities.

All 1-forms here are (1,0)-forms written against the grid chart z: a form
is stored through its density, xi = xi_hat dz.  The matrix density built
from data (phi, omega_hat) is

    xi_hat = [[-phi, phi^2], [-1, phi]] * omega_hat,

trace-free and nilpotent at every node.  The associated so(3,1)-valued
form acting on a fixed vector a produces an R^{3,1}-valued 1-form; it is
returned as a complex 4-vector density w with

    (zeta a)(X) = Re{ w * dz(X) }    componentwise,

obtained through the Hermitian model from M = xi_hat * herm(a).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import DomainGrid, SampledData
from .expr import evaluate
from .minkowski import herm_from_vec


@dataclass
class XiField:
    """Per-node matrix density xi_hat with an evaluator for off-node points."""

    grid: DomainGrid
    values: np.ndarray          # (nv, nu, 2, 2) complex
    mask: np.ndarray            # True at usable nodes
    fn: Callable                # z -> (..., 2, 2) complex, NaN where singular
    secondary: bool = False


def xi_hat_values(phi, omega_hat):
    """Matrix density from sampled phi and omega_hat, broadcasting."""
    phi = np.asarray(phi, dtype=complex)
    omega_hat = np.asarray(omega_hat, dtype=complex)
    out = np.empty(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = -phi
    out[..., 0, 1] = phi * phi
    out[..., 1, 0] = -1.0
    out[..., 1, 1] = phi
    return out * omega_hat[..., None, None]


def _expr_pair_fn(f_expr, g_expr, combine):
    def fn(z):
        fv, fs = evaluate(f_expr, z)
        gv, gs = evaluate(g_expr, z)
        out = combine(fv, gv)
        bad = fs | gs
        if np.any(bad):
            out = np.where(bad[..., None, None], np.nan, out)
        return out
    return fn


def build_xi(data: SampledData, use_secondary: bool = False) -> XiField:
    """Assemble the matrix density field from sampled data.

    With use_secondary the (psi, eta) pair is used instead of (phi, omega);
    raises if the secondary fields are absent.
    """
    if use_secondary:
        if not data.has_secondary:
            raise ValueError("sampled data carries no secondary (psi, eta) fields")
        values = xi_hat_values(data.psi, data.eta_hat)
        fn = _expr_pair_fn(data.psi_expr, data.eta_expr, xi_hat_values) \
            if data.psi_expr is not None and data.eta_expr is not None else None
    else:
        values = xi_hat_values(data.phi, data.omega_hat)
        fn = _expr_pair_fn(data.phi_expr, data.omega_expr, xi_hat_values) \
            if data.phi_expr is not None and data.omega_expr is not None else None
    if fn is None:
        from .domain import grid_line_interpolant
        fn = grid_line_interpolant(values, data.grid, mask=data.mask)
    return XiField(grid=data.grid, values=values, mask=data.mask.copy(),
                   fn=fn, secondary=use_secondary)


def vec_density_from_matrix(m):
    """Complex 4-vector density w of the Hermitian-valued form M dz + (M dz)*.

    For any complex matrix density M, the real 1-form X -> vec(M dz(X) +
    (M dz(X))*) equals Re{w dz} with w as returned here.
    """
    m = np.asarray(m)
    w = np.empty(m.shape[:-2] + (4,), dtype=complex)
    w[..., 0] = m[..., 0, 0] + m[..., 1, 1]
    w[..., 1] = m[..., 0, 1] + m[..., 1, 0]
    w[..., 2] = -1j * (m[..., 0, 1] - m[..., 1, 0])
    w[..., 3] = m[..., 0, 0] - m[..., 1, 1]
    return w


def zeta_vector_density(phi, omega_hat, a):
    """Density w of (zeta a) from sampled phi, omega_hat and a fixed vector a."""
    xh = xi_hat_values(phi, omega_hat)
    return vec_density_from_matrix(xh @ herm_from_vec(np.asarray(a, dtype=float)))


def zeta_apply(data: SampledData, a) -> np.ndarray:
    """Per-node density of the 1-form (zeta a); see module docstring for sign.

    Returns the (nv, nu, 4) complex field w with (zeta a) = Re{w dz}.
    Surface factories integrating dx = -zeta p apply the minus sign.
    """
    return zeta_vector_density(data.phi, data.omega_hat, np.asarray(a, dtype=float))


def zeta_density_fn(data: SampledData, a):
    """Callable z -> w(z) for quadrature between nodes; NaN where singular."""
    a = np.asarray(a, dtype=float)
    if data.phi_expr is None or data.omega_expr is None:
        from .domain import grid_line_interpolant
        return grid_line_interpolant(zeta_apply(data, a), data.grid, mask=data.mask)

    def fn(z):
        pv, ps = evaluate(data.phi_expr, z)
        ov, os_ = evaluate(data.omega_expr, z)
        w = zeta_vector_density(pv, ov, a)
        bad = ps | os_
        if np.any(bad):
            w = np.where(bad[..., None], np.nan, w)
        return w

    return fn
