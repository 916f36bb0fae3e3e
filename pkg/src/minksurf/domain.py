"""Rectangular grids in the complex plane and sampled holomorphic data.

A DomainGrid is a node-centered rectangle: node (iv, iu) sits at
z = re_min + iu*du + 1j*(im_min + iv*dv), arrays are indexed [iv, iu].
Rectangles are simply connected, so every closed 1-form sampled on them
integrates path-independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, differentiate, evaluate, parse_expr


class BasePointMaskedError(ValueError):
    """The integration base node fell on masked data."""


@dataclass(frozen=True)
class DomainGrid:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nu: int
    nv: int
    base_index: tuple[int, int]  # (iv, iu), matching array indexing

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("grid extent must be strictly positive")
        if self.nu < 2 or self.nv < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        iv, iu = self.base_index
        if not (0 <= iv < self.nv and 0 <= iu < self.nu):
            raise ValueError("base_index out of range")

    @property
    def du(self):
        return (self.re_max - self.re_min) / (self.nu - 1)

    @property
    def dv(self):
        return (self.im_max - self.im_min) / (self.nv - 1)

    @property
    def shape(self):
        return (self.nv, self.nu)

    @property
    def diameter(self):
        return float(np.hypot(self.re_max - self.re_min, self.im_max - self.im_min))

    @property
    def base_z(self):
        iv, iu = self.base_index
        return complex(self.re_min + iu * self.du, self.im_min + iv * self.dv)

    def zs(self):
        """Complex node coordinates, shape (nv, nu)."""
        u = np.linspace(self.re_min, self.re_max, self.nu)
        v = np.linspace(self.im_min, self.im_max, self.nv)
        return u[None, :] + 1j * v[:, None]

    def nearest_index(self, z):
        """Grid index (iv, iu) closest to a complex point."""
        z = complex(z)
        iu = int(round((z.real - self.re_min) / self.du))
        iv = int(round((z.imag - self.im_min) / self.dv))
        if not (0 <= iv < self.nv and 0 <= iu < self.nu):
            raise ValueError(f"point {z} lies outside the grid")
        return (iv, iu)

    def with_resolution(self, nu, nv):
        """Same rectangle and base location at a different node count."""
        base_z = self.base_z
        probe = DomainGrid(self.re_min, self.re_max, self.im_min, self.im_max,
                           nu, nv, (0, 0))
        return DomainGrid(self.re_min, self.re_max, self.im_min, self.im_max,
                          nu, nv, probe.nearest_index(base_z))

    @staticmethod
    def square(half_extent, n, base=0j):
        """Centered square [-h, h]^2 with n x n nodes."""
        probe = DomainGrid(-half_extent, half_extent, -half_extent, half_extent,
                           n, n, (0, 0))
        return DomainGrid(-half_extent, half_extent, -half_extent, half_extent,
                          n, n, probe.nearest_index(base))


def dilate_mask(masked, iterations=1):
    """Grow a True-marked (masked) region by rings of 8-neighbors."""
    masked = np.asarray(masked, dtype=bool)
    for _ in range(iterations):
        grown = masked.copy()
        grown[1:, :] |= masked[:-1, :]
        grown[:-1, :] |= masked[1:, :]
        grown[:, 1:] |= masked[:, :-1]
        grown[:, :-1] |= masked[:, 1:]
        grown[1:, 1:] |= masked[:-1, :-1]
        grown[1:, :-1] |= masked[:-1, 1:]
        grown[:-1, 1:] |= masked[1:, :-1]
        grown[:-1, :-1] |= masked[1:, 1:]
        masked = grown
    return masked


@dataclass
class SampledData:
    """Holomorphic data evaluated over a grid.

    mask is True at usable nodes; it is False at singular evaluations,
    near critical points of phi, and one dilation ring around both.
    Expression handles are kept so path integrators can evaluate the
    data between nodes.
    """

    grid: DomainGrid
    phi: np.ndarray
    dphi: np.ndarray
    omega_hat: np.ndarray
    mask: np.ndarray
    phi_expr: Expr | None = None
    dphi_expr: Expr | None = None
    omega_expr: Expr | None = None
    psi: np.ndarray | None = None
    dpsi: np.ndarray | None = None
    eta_hat: np.ndarray | None = None
    psi_expr: Expr | None = field(default=None, repr=False)
    dpsi_expr: Expr | None = field(default=None, repr=False)
    eta_expr: Expr | None = field(default=None, repr=False)

    @property
    def has_secondary(self):
        return self.psi is not None and self.eta_hat is not None


def _as_expr(e):
    return parse_expr(e) if isinstance(e, str) else e


def sample_data(phi, omega_hat, grid, psi=None, eta_hat=None, eps_crit=None):
    """Sample phi, phi', omega (and optional psi, psi', eta) over a grid.

    Nodes are masked at singular evaluations and where |phi'| falls below
    eps_crit (default 1e-8 * grid diameter): critical points of phi are
    excluded rather than modeled.  The masked region is dilated by one
    cell ring.  Raises BasePointMaskedError if the base node is masked.
    """
    phi = _as_expr(phi)
    omega_hat = _as_expr(omega_hat)
    dphi = differentiate(phi)
    zs = grid.zs()
    if eps_crit is None:
        eps_crit = 1e-8 * grid.diameter

    phi_v, s1 = evaluate(phi, zs)
    dphi_v, s2 = evaluate(dphi, zs)
    omega_v, s3 = evaluate(omega_hat, zs)
    bad = s1 | s2 | s3 | (np.abs(dphi_v) < eps_crit)

    data = SampledData(
        grid=grid, phi=phi_v, dphi=dphi_v, omega_hat=omega_v,
        mask=np.zeros(grid.shape, dtype=bool),
        phi_expr=phi, dphi_expr=dphi, omega_expr=omega_hat,
    )

    if psi is not None or eta_hat is not None:
        if psi is None or eta_hat is None:
            raise ValueError("psi and eta_hat must be given together")
        psi = _as_expr(psi)
        eta_hat = _as_expr(eta_hat)
        dpsi = differentiate(psi)
        psi_v, t1 = evaluate(psi, zs)
        dpsi_v, t2 = evaluate(dpsi, zs)
        eta_v, t3 = evaluate(eta_hat, zs)
        bad = bad | t1 | t2 | t3
        data.psi, data.dpsi, data.eta_hat = psi_v, dpsi_v, eta_v
        data.psi_expr, data.dpsi_expr, data.eta_expr = psi, dpsi, eta_hat

    data.mask = ~dilate_mask(bad)
    iv, iu = grid.base_index
    if not data.mask[iv, iu]:
        raise BasePointMaskedError(
            "base node is masked; choose another base point")
    return data


# barycentric weights for equispaced Lagrange stencils, by stencil size
_BARY = {n: np.array([(-1.0) ** j * float(math.comb(n - 1, j)) for j in range(n)])
         for n in (2, 3, 4, 5, 6)}


def _lagrange_1d(samples, t, stencil):
    """Barycentric interpolation of rows of samples at fractional index t.

    samples: (q, n) + tail, t: (q,). Uses `stencil` nearest nodes per query.
    """
    n = samples.shape[1]
    stencil = min(stencil, n)
    w = _BARY[stencil]
    start = np.clip(np.floor(t).astype(int) - (stencil // 2 - 1), 0, n - stencil)
    tt = t - start
    offsets = np.arange(stencil)
    idx = start[:, None] + offsets[None, :]
    vals = np.take_along_axis(
        samples, idx.reshape(idx.shape + (1,) * (samples.ndim - 2)), axis=1)
    diff = tt[:, None] - offsets[None, :]
    exact = np.abs(diff) < 1e-12
    diff = np.where(exact, 1.0, diff)
    coeff = w[None, :] / diff
    coeff = np.where(exact.any(axis=1)[:, None], exact.astype(float), coeff)
    denom = coeff.sum(axis=1)
    coeff = coeff / denom[:, None]
    coeff = coeff.reshape(coeff.shape + (1,) * (samples.ndim - 2))
    return (vals * coeff).sum(axis=1)


def grid_line_interpolant(values, grid, mask=None, stencil=6):
    """Wrap per-node samples as a callable for points on grid lines.

    Queries must lie on a horizontal or vertical grid line (the staircase
    integrators only ever ask for such points); interpolation is 1D
    Lagrange on the `stencil` nearest nodes of that line.  Values at
    queries whose stencil touches a masked node come back NaN.
    """
    values = np.asarray(values)
    work = values.astype(complex)
    if mask is not None:
        work = work.copy()
        work[~np.asarray(mask, dtype=bool)] = np.nan

    def f(z):
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        fu = (flat.real - grid.re_min) / grid.du
        fv = (flat.imag - grid.im_min) / grid.dv
        on_row = np.abs(fv - np.round(fv)) <= 1e-9 * max(grid.nv, 1)
        out = np.empty((flat.size,) + values.shape[2:], dtype=complex)
        sel = np.nonzero(on_row)[0]
        if sel.size:
            rows = np.clip(np.round(fv[sel]).astype(int), 0, grid.nv - 1)
            out[sel] = _lagrange_1d(work[rows], fu[sel], stencil)
        sel = np.nonzero(~on_row)[0]
        if sel.size:
            fuq = fu[sel]
            if np.any(np.abs(fuq - np.round(fuq)) > 1e-9 * max(grid.nu, 1)):
                raise ValueError("interpolation queries must lie on grid lines")
            cols = np.clip(np.round(fuq).astype(int), 0, grid.nu - 1)
            samples = np.swapaxes(work, 0, 1)[cols]
            out[sel] = _lagrange_1d(samples, fv[sel], stencil)
        return out.reshape(z.shape + values.shape[2:])

    return f
