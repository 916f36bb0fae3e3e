"""Surface factories: seven target geometries from holomorphic data.

Every factory returns a SurfaceSample: gridded positions in R^{3,1}
together with the lightlike Gauss section that certifies the construction
(rescaled so its pairing with the position or hyperplane normal is -1),
an optional unit normal, and a validity mask.  Non-immersion loci
(where the Gauss direction degenerates against the target) are masked
and dilated by one ring, matching the sampling convention.

The three families:

  * affine: integrate dx = -(zeta p) into the hyperplane normal to p;
    zero mean curvature there (minimal / maximal / isotropic cases).
  * quadric: transport the frame dPsi = -m xi Psi and set
    x = Psi diag(1, -mu) Psi*, giving (x, x) = mu (CMC surfaces in H^3
    or S^{2,1}, intrinsically flat surfaces in the lightcone).
  * linear-Weingarten: transport dPsi = -m Psi xi_m from secondary data
    (psi, eta) -- note the opposite multiplication side -- and assemble
    the explicit position; the companion middle-sphere congruence is the
    quadric formula in the same frame.

The T-transform perturbation couples the frame to the quadrature of
dx_m = -m (Ad_Psi^{-1} xi) applied to the quadric anchor, turning
quadric surfaces into affine ones without leaving the grid walk.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from .domain import DomainGrid, SampledData, dilate_mask, grid_line_interpolant
from .expr import Expr, differentiate, evaluate, parse_expr
from .fd import central_diff, stencil_valid
from .forms import build_xi, vec_density_from_matrix, xi_hat_values, zeta_density_fn
from .integrate import (FrameField, FrameSide, FrameSpec, IntegralSpec, PathOrder,
                        integrate_closed_form, solve_path_system, solve_psi)
from .minkowski import (LIGHTLIKE, SPACELIKE, TIMELIKE, causal_type,
                        herm_from_vec, inv2, ip31, vec_from_herm_unchecked)

EPS_DEGENERATE = 0.02   # relative threshold for non-immersion masking
EPS_LW_POLE = 1e-6      # relative threshold on |1 - mu |psi|^2|


class GeometryKind(str, Enum):
    AFFINE_E3 = "affine-e3"
    AFFINE_L3 = "affine-l3"
    AFFINE_ISOTROPIC = "affine-isotropic"
    QUADRIC_H3 = "quadric-h3"
    QUADRIC_DESITTER = "quadric-desitter"
    QUADRIC_LIGHTCONE = "quadric-lightcone"
    LW_BRYANT = "lw-bryant"


AFFINE_KINDS = (GeometryKind.AFFINE_E3, GeometryKind.AFFINE_L3,
                GeometryKind.AFFINE_ISOTROPIC)
QUADRIC_KINDS = (GeometryKind.QUADRIC_H3, GeometryKind.QUADRIC_DESITTER,
                 GeometryKind.QUADRIC_LIGHTCONE)

_AFFINE_KIND_BY_CAUSAL = {
    TIMELIKE: GeometryKind.AFFINE_E3,
    SPACELIKE: GeometryKind.AFFINE_L3,
    LIGHTLIKE: GeometryKind.AFFINE_ISOTROPIC,
}


def quadric_kind_for(mu):
    if mu < 0:
        return GeometryKind.QUADRIC_H3
    if mu > 0:
        return GeometryKind.QUADRIC_DESITTER
    return GeometryKind.QUADRIC_LIGHTCONE


@dataclass(frozen=True)
class TargetGeometry:
    """Validated target description used by the pipeline driver."""

    kind: GeometryKind
    mu: float = 0.0
    m: float = 1.0
    p: tuple | None = None

    def __post_init__(self):
        if self.kind in AFFINE_KINDS:
            if self.p is None:
                raise ValueError("affine targets need the hyperplane normal p")
            p = np.asarray(self.p, dtype=float)
            if not np.any(p):
                raise ValueError("hyperplane normal p must be non-zero")
            expected = _AFFINE_KIND_BY_CAUSAL[causal_type(p)]
            if expected is not self.kind:
                raise ValueError(
                    f"p is {causal_type(p)}, which selects {expected.value}, "
                    f"not {self.kind.value}")
        else:
            if self.m == 0:
                raise ValueError("quadric and linear-Weingarten targets need m != 0")
            if self.kind in QUADRIC_KINDS and quadric_kind_for(self.mu) is not self.kind:
                raise ValueError(
                    f"mu={self.mu} selects {quadric_kind_for(self.mu).value}, "
                    f"not {self.kind.value}")


@dataclass
class SurfaceSample:
    """Gridded surface with positions, Gauss section, normal and mask."""

    grid: DomainGrid
    kind: GeometryKind
    x: np.ndarray                     # (nv, nu, 4) real positions
    mask: np.ndarray                  # (nv, nu) bool, True = usable
    gauss: np.ndarray | None = None   # lightlike section, pairing -1
    normal: np.ndarray | None = None  # unit normal where defined
    params: dict = dc_field(default_factory=dict)
    aux: dict = dc_field(default_factory=dict)

    @property
    def hyperplane_normal(self):
        p = self.params.get("p")
        return None if p is None else np.asarray(p, dtype=float)


def gauss_lift(phi):
    """Lightlike lift of the Gauss direction from phi values, broadcasting.

    Returns (1+|phi|^2, 2 Re phi, 2 Im phi, |phi|^2 - 1); its Hermitian
    image is 2 v v* with v = (phi, 1)^T, null by construction.
    """
    phi = np.asarray(phi, dtype=complex)
    r2 = (phi * np.conj(phi)).real
    out = np.empty(phi.shape + (4,))
    out[..., 0] = 1.0 + r2
    out[..., 1] = 2.0 * phi.real
    out[..., 2] = 2.0 * phi.imag
    out[..., 3] = r2 - 1.0
    return out


def _euclid(v):
    return np.sqrt(np.sum(np.asarray(v) ** 2, axis=-1))


def _degenerate_mask(pairing, scale, eps):
    bad = np.abs(pairing) < eps * scale
    return dilate_mask(bad)


def _rescaled_gauss(g, pairing):
    """Rescale a lift so the recorded pairing becomes -1; NaN where it can't."""
    with np.errstate(all="ignore"):
        return g * (-1.0 / pairing)[..., None]


def make_affine_surface(data: SampledData, p, base_x=None, *,
                        eps_degenerate=EPS_DEGENERATE, substeps=4,
                        order=PathOrder.ROW_FIRST) -> SurfaceSample:
    """Integrate dx = -(zeta p) into the affine hyperplane normal to p.

    Masks nodes where the Gauss direction is orthogonal to p (x fails to
    immerse there).  For non-lightlike p a normal g - p is attached, with
    the Gauss section rescaled to pairing -1 against p.
    """
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise ValueError("hyperplane normal p must be non-zero")
    kind = _AFFINE_KIND_BY_CAUSAL[causal_type(p)]
    if base_x is None:
        base_x = np.zeros(4)
    base_x = np.asarray(base_x, dtype=float)

    density = zeta_density_fn(data, p)
    integral, valid = integrate_closed_form(
        density, data.grid, base_value=np.zeros(4, dtype=complex),
        mask=data.mask, order=order, substeps=substeps)
    x = base_x - np.where(np.isfinite(integral.real), integral.real, np.nan)

    g = gauss_lift(data.phi)
    gp = ip31(g, p)
    degenerate = _degenerate_mask(gp, (1.0 + np.abs(data.phi) ** 2) * max(_euclid(p), 1e-30),
                                  eps_degenerate)
    mask = valid & data.mask & ~degenerate

    gauss = _rescaled_gauss(g, gp)
    normal = None
    if kind is not GeometryKind.AFFINE_ISOTROPIC:
        normal = gauss - p
    return SurfaceSample(grid=data.grid, kind=kind, x=x, mask=mask, gauss=gauss,
                         normal=normal,
                         params={"p": tuple(p), "base_x": tuple(base_x)})


def make_quadric_surface(data: SampledData, m, mu, *, psi0=None,
                         eps_degenerate=EPS_DEGENERATE, substeps=4,
                         order=PathOrder.ROW_FIRST) -> SurfaceSample:
    """Frame transport x = Psi diag(1, -mu) Psi* with (x, x) = mu.

    Masks nodes where x is orthogonal to the Gauss direction.  For mu != 0
    an ambient-tangent unit normal gauss + x/mu is attached.
    """
    if m == 0:
        raise ValueError("m must be non-zero")
    xi = build_xi(data)
    frame = solve_psi(xi, m, data.grid, psi0, side=FrameSide.LEFT,
                      mask=data.mask, order=order, substeps=substeps)
    c = np.array([[1.0, 0.0], [0.0, -mu]], dtype=complex)
    psi = frame.values
    psi_star = np.conj(np.swapaxes(psi, -1, -2))
    x = vec_from_herm_unchecked(psi @ c @ psi_star)

    g = gauss_lift(data.phi)
    xg = ip31(x, g)
    scale = np.maximum(_euclid(x), 1e-30) * _euclid(g)
    degenerate = _degenerate_mask(np.where(np.isfinite(xg), xg, 0.0), scale,
                                  eps_degenerate)
    mask = frame.valid & data.mask & ~degenerate

    gauss = _rescaled_gauss(g, xg)
    normal = None if mu == 0 else gauss + x / mu
    return SurfaceSample(grid=data.grid, kind=quadric_kind_for(mu), x=x, mask=mask,
                         gauss=gauss, normal=normal,
                         params={"mu": mu, "m": m},
                         aux={"frame": frame})


def secondary_gauss(frame: FrameField, phi):
    """Transformed Gauss function psi from the frame, by Moebius action.

    With F = Psi^{-1}, psi = (F11 phi + F12) / (F21 phi + F22); returns
    (psi, ok) with ok False where the denominator nearly vanishes.
    """
    phi = np.asarray(phi, dtype=complex)
    psi_m = frame.values
    num = psi_m[..., 1, 1] * phi - psi_m[..., 0, 1]
    den = -psi_m[..., 1, 0] * phi + psi_m[..., 0, 0]
    scale = np.sqrt(np.abs(num) ** 2 + np.abs(den) ** 2)
    ok = np.abs(den) > 1e-9 * scale
    with np.errstate(all="ignore"):
        psi = np.where(ok, num / np.where(ok, den, 1.0), np.nan)
    return psi, ok & frame.valid


def secondary_form(frame: FrameField, data: SampledData):
    """Secondary 1-form density eta and psi via the gauge-moved matrix density.

    Conjugating the matrix density by the frame gives the secondary
    density [[-psi, psi^2], [-1, psi]] * eta nodewise; eta is read off
    the (1,0) entry, psi from the entry ratio.
    """
    xim = gauge_transformed_density(frame, xi_hat_values(data.phi, data.omega_hat))
    eta = -xim[..., 1, 0]
    with np.errstate(all="ignore"):
        psi = np.where(np.abs(eta) > 0, xim[..., 0, 0] / xim[..., 1, 0], np.nan)
    return psi, eta


def gauge_transformed_density(frame: FrameField, xi_hat):
    """Ad-action of the inverse frame on a matrix density: Psi^{-1} xi Psi."""
    psi = frame.values
    return inv2(psi) @ np.asarray(xi_hat, dtype=complex) @ psi


def uy_perturb(data: SampledData, m, mu, base_x=None, *,
               eps_degenerate=EPS_DEGENERATE, substeps=4,
               order=PathOrder.ROW_FIRST) -> SurfaceSample:
    """T-transform of the quadric surface: a zero-mean-curvature affine surface.

    Couples the frame transport to the quadrature of the gauge-moved form
    applied to the quadric anchor diag(1, -mu); the result lies in the
    affine hyperplane Minkowski-normal to that anchor vector.
    """
    if m == 0:
        raise ValueError("m must be non-zero")
    xi = build_xi(data)
    c_mat = np.array([[1.0, 0.0], [0.0, -mu]], dtype=complex)
    c_vec = vec_from_herm_unchecked(c_mat)
    if base_x is None:
        base_x = np.zeros(4)
    base_x = np.asarray(base_x, dtype=float)

    def density(z, states):
        xim = inv2(states[0]) @ xi.fn(z) @ states[0]
        return -m * vec_density_from_matrix(xim @ c_mat)

    frame_spec = FrameSpec(coeff=lambda z, _st: xi.fn(z), m=m, side=FrameSide.LEFT)
    int_spec = IntegralSpec(density=density, base_value=np.zeros(4, dtype=complex))
    sol = solve_path_system(data.grid, [frame_spec], [int_spec], mask=xi.mask,
                            order=order, substeps=substeps)
    frame = FrameField(grid=data.grid, values=sol.frames[0], valid=sol.valid,
                       m=m, side=FrameSide.LEFT, det_drift=sol.det_drifts[0],
                       order=order)
    x = base_x + np.where(np.isfinite(sol.integrals[0].real),
                          sol.integrals[0].real, np.nan)

    psi_sec, sec_ok = secondary_gauss(frame, data.phi)
    gm = gauss_lift(np.where(sec_ok, psi_sec, 0.0))
    gmc = ip31(gm, c_vec)
    degenerate = _degenerate_mask(gmc, (1.0 + np.abs(psi_sec) ** 2) * max(_euclid(c_vec), 1e-30),
                                  eps_degenerate) | dilate_mask(~sec_ok)
    mask = sol.valid & data.mask & ~degenerate

    kind = _AFFINE_KIND_BY_CAUSAL[causal_type(c_vec)]
    gauss = _rescaled_gauss(gm, gmc)
    normal = None
    if kind is not GeometryKind.AFFINE_ISOTROPIC:
        normal = gauss - c_vec
    return SurfaceSample(grid=data.grid, kind=kind, x=x, mask=mask, gauss=gauss,
                         normal=normal,
                         params={"p": tuple(c_vec), "mu": mu, "m": m,
                                 "base_x": tuple(base_x)},
                         aux={"frame": frame, "psi": psi_sec, "perturbed": True})


def _as_field_and_fn(obj, grid, mask):
    """Accept an expression (or text) or a per-node array; give values + callable."""
    if isinstance(obj, str):
        obj = parse_expr(obj)
    if isinstance(obj, Expr):
        vals, sing = evaluate(obj, grid.zs())
        vals = np.where(sing, np.nan, vals)

        def fn(z, e=obj):
            v, s = evaluate(e, z)
            return np.where(s, np.nan, v)

        return vals, fn, obj
    vals = np.asarray(obj, dtype=complex)
    return vals, grid_line_interpolant(vals, grid, mask=mask), None


def make_lw_bryant(psi, eta_hat, m, mu, grid: DomainGrid, *, mask=None,
                   psi0=None, eps_pole=EPS_LW_POLE, substeps=4,
                   order=PathOrder.ROW_FIRST):
    """Linear Weingarten surface of Bryant type plus its middle sphere.

    psi and eta_hat may be expressions/text or per-node sampled arrays
    (sampled data is line-interpolated for the transport).  The frame
    solves dPsi = -m Psi xi -- coefficient on the right.  Nodes where
    1 - mu |psi|^2 nearly vanishes are masked.  Returns (surface, middle).
    """
    if m == 0:
        raise ValueError("m must be non-zero")
    psi_v, psi_fn, _ = _as_field_and_fn(psi, grid, mask)
    eta_v, eta_fn, _ = _as_field_and_fn(eta_hat, grid, mask)

    def coeff(z):
        return xi_hat_values(psi_fn(z), eta_fn(z))

    node_ok = np.isfinite(psi_v) & np.isfinite(eta_v)
    if mask is not None:
        node_ok &= np.asarray(mask, dtype=bool)
    frame = solve_psi(coeff, m, grid, psi0, side=FrameSide.RIGHT, mask=node_ok,
                      order=order, substeps=substeps)

    r2 = np.abs(psi_v) ** 2
    pole = 1.0 - mu * r2
    pole_bad = dilate_mask(np.abs(pole) < eps_pole * (1.0 + abs(mu) * r2))
    surf_mask = frame.valid & node_ok & ~pole_bad

    inner = np.empty(grid.shape + (2, 2), dtype=complex)
    inner[..., 0, 0] = 1.0 + r2
    inner[..., 0, 1] = (mu + 1.0) * psi_v
    inner[..., 1, 0] = (mu + 1.0) * np.conj(psi_v)
    inner[..., 1, 1] = 1.0 + mu ** 2 * r2
    psi_m = frame.values
    psi_star = np.conj(np.swapaxes(psi_m, -1, -2))
    with np.errstate(all="ignore"):
        x = vec_from_herm_unchecked(psi_m @ inner @ psi_star) / pole[..., None]
        gtilde = vec_from_herm_unchecked(
            psi_m @ herm_from_vec(gauss_lift(psi_v)) @ psi_star) / pole[..., None]
    normal = gtilde - x

    surface = SurfaceSample(grid=grid, kind=GeometryKind.LW_BRYANT, x=x,
                            mask=surf_mask, gauss=gtilde, normal=normal,
                            params={"mu": mu, "m": m},
                            aux={"frame": frame, "psi": psi_v, "eta_hat": eta_v})

    c = np.array([[1.0, 0.0], [0.0, -mu]], dtype=complex)
    xm = vec_from_herm_unchecked(psi_m @ c @ psi_star)
    middle_normal = None if mu == 0 else gtilde + xm / mu
    middle = SurfaceSample(grid=grid, kind=quadric_kind_for(mu), x=xm,
                           mask=surf_mask, gauss=gtilde, normal=middle_normal,
                           params={"mu": mu, "m": m, "middle_sphere": True},
                           aux={"frame": frame})
    return surface, middle


def h_frame_check(frame: FrameField, psi, eta_hat, m, *, dpsi=None):
    """Residual of the null-curve frame equation for the LW pipeline.

    Builds H = Psi [[i psi, i], [i, 0]] nodewise, finite-differences
    H^{-1} dH, and returns the maximum deviation from the expected
    off-diagonal form [[0, m eta], [psi', 0]] dz over full-stencil nodes.
    """
    grid = frame.grid
    psi_v, _, psi_expr = _as_field_and_fn(psi, grid, None)
    eta_v, _, _ = _as_field_and_fn(eta_hat, grid, None)
    if dpsi is not None:
        dpsi_v, _, _ = _as_field_and_fn(dpsi, grid, None)
    elif psi_expr is not None:
        dpsi_v, sing = evaluate(differentiate(psi_expr), grid.zs())
        dpsi_v = np.where(sing, np.nan, dpsi_v)
    else:
        dpsi_v = central_diff(psi_v, grid.du, axis=1)

    hmat = np.empty(grid.shape + (2, 2), dtype=complex)
    hmat[..., 0, 0] = 1j * psi_v
    hmat[..., 0, 1] = 1j
    hmat[..., 1, 0] = 1j
    hmat[..., 1, 1] = 0.0
    hmat = frame.values @ hmat

    hu = central_diff(hmat, grid.du, axis=1)
    hv = central_diff(hmat, grid.dv, axis=0)
    hinv = inv2(hmat)
    au = hinv @ hu
    av = hinv @ hv

    expected = np.zeros(grid.shape + (2, 2), dtype=complex)
    expected[..., 0, 1] = m * eta_v
    expected[..., 1, 0] = dpsi_v

    dev_u = np.sqrt(np.sum(np.abs(au - expected) ** 2, axis=(-2, -1)))
    dev_v = np.sqrt(np.sum(np.abs(av - 1j * expected) ** 2, axis=(-2, -1)))
    ok = stencil_valid(frame.valid & np.isfinite(psi_v) & np.isfinite(eta_v)
                       & np.isfinite(dpsi_v), radius=2)
    if not np.any(ok):
        return float("nan")
    return float(np.max(np.maximum(dev_u, dev_v)[ok]))
