"""Numerical verification: fundamental forms, curvatures, and residuals.

Everything here is plain second-order central finite differences on the
grid chart; nodes whose stencil touches a masked node (or the grid
boundary) are excluded rather than treated one-sided.  Residual maxima
additionally exclude a 2-node ring so every reported number comes from a
full-quality stencil.

Sign conventions: II is the pairing of coordinate second derivatives with
the unit normal (for surfaces inside a quadric the normal is tangent to
the ambient quadric, so the pairing automatically projects out the
position direction); H = tr(I^-1 II)/2 and K = det(I^-1 II).  With the
Gauss sections produced by the factories this yields H = +1 for the
standard horosphere.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fd import central_diff, mixed_diff, second_diff, stencil_valid
from .minkowski import ip31, skew_frobenius, wedge_to_skew
from .surfaces import AFFINE_KINDS, GeometryKind, SurfaceSample

EPS_METRIC = 1e-12


def _finite_all(a):
    return np.isfinite(a).all(axis=-1)


def _enorm(v):
    return np.sqrt(np.sum(np.asarray(v) ** 2, axis=-1))


def _tangents(x, grid):
    return (central_diff(x, grid.du, axis=1), central_diff(x, grid.dv, axis=0))


def first_form(surface: SurfaceSample):
    """Induced metric I by central differences: (I, xu, xv, valid)."""
    grid = surface.grid
    with np.errstate(all="ignore"):
        xu, xv = _tangents(surface.x, grid)
        i_form = np.empty(grid.shape + (2, 2))
        i_form[..., 0, 0] = ip31(xu, xu)
        i_form[..., 0, 1] = i_form[..., 1, 0] = ip31(xu, xv)
        i_form[..., 1, 1] = ip31(xv, xv)
    valid = stencil_valid(surface.mask & _finite_all(surface.x), radius=2)
    return i_form, xu, xv, valid


def _prepared_normal(surface: SurfaceSample):
    """Unit normal orthogonal to the carrier (hyperplane or quadric)."""
    if surface.normal is None:
        raise ValueError(f"{surface.kind.value} surface carries no normal field")
    n = surface.normal.copy()
    with np.errstate(all="ignore"):
        if surface.kind in AFFINE_KINDS:
            p = surface.hyperplane_normal
            pp = float(ip31(p, p))
            if abs(pp) > 1e-14:
                n = n - p * (ip31(n, p) / pp)[..., None]
        else:
            xx = ip31(surface.x, surface.x)
            n = n - surface.x * (ip31(n, surface.x) / xx)[..., None]
        q = ip31(n, n)
        n = n / np.sqrt(np.abs(q))[..., None]
    return n


def fundamental_forms(surface: SurfaceSample):
    """First and second fundamental forms: (I, II, valid).

    The normal is re-orthogonalized against the carrier and normalized to
    |(n, n)| = 1 before pairing with the FD second derivatives.
    """
    grid = surface.grid
    i_form, xu, xv, valid = first_form(surface)
    n = _prepared_normal(surface)
    x = surface.x
    with np.errstate(all="ignore"):
        xuu = second_diff(x, grid.du, axis=1)
        xvv = second_diff(x, grid.dv, axis=0)
        xuv = mixed_diff(x, grid.du, grid.dv)
        ii_form = np.empty(grid.shape + (2, 2))
        ii_form[..., 0, 0] = ip31(xuu, n)
        ii_form[..., 0, 1] = ii_form[..., 1, 0] = ip31(xuv, n)
        ii_form[..., 1, 1] = ip31(xvv, n)
    valid = valid & _finite_all(n)
    return i_form, ii_form, valid


def curvatures(i_form, ii_form, eps=EPS_METRIC, eps_rel=1e-8):
    """Mean and extrinsic Gauss curvature: H = tr(I^-1 II)/2, K = det(I^-1 II).

    Nodes with a degenerate metric are masked, judged both absolutely and
    relative to the metric scale (fronts cross genuine det I = 0 curves).
    """
    e = i_form[..., 0, 0]
    f = i_form[..., 0, 1]
    g = i_form[..., 1, 1]
    l = ii_form[..., 0, 0]
    m = ii_form[..., 0, 1]
    n = ii_form[..., 1, 1]
    det_i = e * g - f * f
    scale = 0.25 * (np.abs(e) + np.abs(g)) ** 2
    ok = (np.abs(det_i) > eps) & (np.abs(det_i) > eps_rel * scale)
    with np.errstate(all="ignore"):
        h = np.where(ok, (e * n - 2.0 * f * m + g * l) / (2.0 * det_i), np.nan)
        k = np.where(ok, (l * n - m * m) / det_i, np.nan)
    return h, k, ok


def intrinsic_curvature(i_form, grid, eps=EPS_METRIC):
    """Gauss curvature of the induced metric via the Brioschi formula."""
    e = i_form[..., 0, 0]
    f = i_form[..., 0, 1]
    g = i_form[..., 1, 1]
    du, dv = grid.du, grid.dv
    with np.errstate(all="ignore"):
        e_u, e_v = central_diff(e, du, 1), central_diff(e, dv, 0)
        f_u, f_v = central_diff(f, du, 1), central_diff(f, dv, 0)
        g_u, g_v = central_diff(g, du, 1), central_diff(g, dv, 0)
        e_vv = second_diff(e, dv, 0)
        g_uu = second_diff(g, du, 1)
        f_uv = mixed_diff(f, du, dv)

    m1 = np.empty(e.shape + (3, 3))
    m1[..., 0, 0] = -0.5 * e_vv + f_uv - 0.5 * g_uu
    m1[..., 0, 1] = 0.5 * e_u
    m1[..., 0, 2] = f_u - 0.5 * e_v
    m1[..., 1, 0] = f_v - 0.5 * g_u
    m1[..., 1, 1] = e
    m1[..., 1, 2] = f
    m1[..., 2, 0] = 0.5 * g_v
    m1[..., 2, 1] = f
    m1[..., 2, 2] = g
    m2 = np.empty_like(m1)
    m2[..., 0, 0] = 0.0
    m2[..., 0, 1] = 0.5 * e_v
    m2[..., 0, 2] = 0.5 * g_u
    m2[..., 1, 0] = 0.5 * e_v
    m2[..., 1, 1] = e
    m2[..., 1, 2] = f
    m2[..., 2, 0] = 0.5 * g_u
    m2[..., 2, 1] = f
    m2[..., 2, 2] = g

    det_i = e * g - f * f
    ok = np.abs(det_i) > eps
    bad = ~np.isfinite(m1).all(axis=(-2, -1))
    m1[bad] = np.eye(3)
    m2[bad] = np.eye(3)
    with np.errstate(all="ignore"):
        k_int = (np.linalg.det(m1) - np.linalg.det(m2)) / det_i ** 2
    return np.where(ok & ~bad, k_int, np.nan), ok


def christoffel_residual(x, x_star, grid, mask=None):
    """Discretized duality residuals of a surface pair.

    Returns (pairing, wedge, valid): pairing is the scalar antisymmetric
    residual (dx(X), dx*(Y)) - (dx(Y), dx*(X)) on coordinate directions;
    wedge is the Frobenius norm of the corresponding 2-vector-valued
    residual, assembled through the skew-endomorphism picture.
    """
    with np.errstate(all="ignore"):
        xu, xv = _tangents(x, grid)
        su, sv = _tangents(x_star, grid)
        pairing = ip31(xu, sv) - ip31(xv, su)
        wedge = skew_frobenius(wedge_to_skew(xu, sv) - wedge_to_skew(xv, su))
    ok = _finite_all(x) & _finite_all(x_star)
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool)
    return pairing, wedge, stencil_valid(ok, radius=2)


def mean_curvature_vector(surface: SurfaceSample, eps=EPS_METRIC):
    """Mean curvature vector by metric-traced FD second derivatives.

    Returns (hvec, valid); valid requires a spacelike nondegenerate
    induced metric at full-stencil nodes.
    """
    grid = surface.grid
    i_form, xu, xv, valid = first_form(surface)
    x = surface.x
    with np.errstate(all="ignore"):
        xuu = second_diff(x, grid.du, axis=1)
        xvv = second_diff(x, grid.dv, axis=0)
        xuv = mixed_diff(x, grid.du, grid.dv)
    e = i_form[..., 0, 0]
    f = i_form[..., 0, 1]
    g = i_form[..., 1, 1]
    det_i = e * g - f * f
    ok = valid & (det_i > eps) & (e > 0)
    with np.errstate(all="ignore"):
        lap = (g[..., None] * xuu - 2.0 * f[..., None] * xuv
               + e[..., None] * xvv) / det_i[..., None]
        b1 = ip31(lap, xu)
        b2 = ip31(lap, xv)
        a1 = (g * b1 - f * b2) / det_i
        a2 = (e * b2 - f * b1) / det_i
        hvec = 0.5 * (lap - a1[..., None] * xu - a2[..., None] * xv)
    return hvec, ok


def marginally_trapped_residual(surface: SurfaceSample, floor_rel=1e-6):
    """Nullity of the mean curvature vector, plus its Gauss alignment.

    residual = |(Hvec, Hvec)| / max(|Hvec|_E, floor)^2 and
    alignment = |(Hvec, g)| / (max(|Hvec|_E, floor) * |g|_E); the floor is
    floor_rel * (1 + max |Hvec|_E), keeping the ratio meaningful when the
    mean curvature vector itself vanishes (affine surfaces).
    """
    hvec, ok = mean_curvature_vector(surface)
    norm = np.sqrt(np.sum(hvec ** 2, axis=-1))
    if not np.any(ok):
        nanf = np.full(surface.grid.shape, np.nan)
        return nanf, nanf, ok
    floor = floor_rel * (1.0 + float(np.nanmax(np.where(ok, norm, 0.0))))
    denom = np.maximum(norm, floor)
    with np.errstate(all="ignore"):
        residual = np.abs(ip31(hvec, hvec)) / denom ** 2
        alignment = None
        if surface.gauss is not None:
            gnorm = np.sqrt(np.sum(surface.gauss ** 2, axis=-1))
            alignment = np.abs(ip31(hvec, surface.gauss)) / (denom * np.maximum(gnorm, floor))
    if alignment is None:
        alignment = np.full(surface.grid.shape, np.nan)
    return residual, alignment, ok


def conformality_residual(surface: SurfaceSample):
    """Deviation from isothermal coordinates: (|E-G|, |F|, valid)."""
    i_form, _xu, _xv, valid = first_form(surface)
    e = i_form[..., 0, 0]
    f = i_form[..., 0, 1]
    g = i_form[..., 1, 1]
    return np.abs(e - g), np.abs(f), valid


def lw_residual(h, k, mu):
    """Pointwise linear-Weingarten defect |(mu+1)K - 2 mu H + (mu-1)|."""
    return np.abs((mu + 1.0) * k - 2.0 * mu * h + (mu - 1.0))


# ---------------------------------------------------------------------------
# report assembly

@dataclass
class ResidualStat:
    name: str
    max_value: float
    tolerance: float
    passed: bool
    nodes: int


@dataclass
class CurvatureReport:
    kind: str
    grid_shape: tuple
    stats: dict = dc_field(default_factory=dict)
    fields: dict = dc_field(default_factory=dict)
    interior: np.ndarray | None = None

    @property
    def passed(self):
        return all(s.passed for s in self.stats.values())

    def add(self, name, values, tolerance, where=None):
        sel = self.interior if where is None else (self.interior & where)
        sel = sel & np.isfinite(values)
        if np.any(sel):
            mx = float(np.max(np.abs(values[sel])))
            count = int(np.sum(sel))
        else:
            mx, count = float("nan"), 0
        passed = bool(count > 0 and mx <= tolerance)
        self.stats[name] = ResidualStat(name, mx, float(tolerance), passed, count)
        self.fields[name] = values

    def to_dict(self):
        return {
            "kind": self.kind,
            "grid": list(self.grid_shape),
            "passed": self.passed,
            "residuals": {
                name: {
                    "max": None if np.isnan(s.max_value) else s.max_value,
                    "tolerance": s.tolerance,
                    "passed": s.passed,
                    "nodes": s.nodes,
                } for name, s in sorted(self.stats.items())
            },
        }


def default_tolerances(surface: SurfaceSample):
    """Per-kind residual tolerances; grid-independent unless noted."""
    h = max(surface.grid.du, surface.grid.dv)
    tol = {
        "hyperplane": 1e-9 * max(surface.grid.diameter, 1.0),
        "quadric": 1e-8,
        "lightcone": 1e-10,
        "mean_curvature": 1e-5,
        "intrinsic_flatness": 1e-3,
        "linear_weingarten": 1e-3,
        "marginally_trapped": 1e-3,
        "gauss_alignment": 1e-3,
        "christoffel_pairing": 50.0 * h ** 2,
        "christoffel_wedge": 50.0 * h ** 2,
        "conformality": 20.0 * h ** 2,
    }
    if surface.kind is GeometryKind.AFFINE_ISOTROPIC:
        tol["marginally_trapped"] = 1e-5
        tol["gauss_alignment"] = 1e-5
    if surface.kind is GeometryKind.QUADRIC_LIGHTCONE:
        tol["marginally_trapped"] = 1e-2
        tol["gauss_alignment"] = 1e-2
    if surface.aux.get("perturbed"):
        tol["mean_curvature"] = 1e-4
        tol["hyperplane"] = 1e-9
    if surface.kind in (GeometryKind.QUADRIC_H3, GeometryKind.QUADRIC_DESITTER,
                        GeometryKind.LW_BRYANT):
        tol["mean_curvature"] = 1e-4
    return tol


def verify_surface(surface: SurfaceSample, tolerances=None) -> CurvatureReport:
    """Run the geometry-specific residual suite for a pipeline surface.

    Residual maxima exclude a 2-ring around masked nodes and the grid
    boundary.  Pass/fail is decided against default_tolerances() merged
    with the given overrides.
    """
    tol = default_tolerances(surface)
    if tolerances:
        tol.update(tolerances)
    report = CurvatureReport(kind=surface.kind.value, grid_shape=surface.grid.shape)
    report.interior = stencil_valid(surface.mask & _finite_all(surface.x), radius=2)
    x = surface.x
    grid = surface.grid
    kind = surface.kind

    if kind in AFFINE_KINDS:
        p = surface.hyperplane_normal
        base_iv, base_iu = grid.base_index
        level = float(ip31(x[base_iv, base_iu], p))
        report.add("hyperplane", ip31(x, p) - level, tol["hyperplane"],
                   where=surface.mask)
    elif kind is GeometryKind.QUADRIC_LIGHTCONE:
        report.add("lightcone", ip31(x, x), tol["lightcone"], where=surface.mask)
    else:
        mu = -1.0 if kind is GeometryKind.LW_BRYANT else surface.params["mu"]
        report.add("quadric", ip31(x, x) - mu, tol["quadric"], where=surface.mask)

    # Perturbed surfaces are transport-based (no polynomial exactness), so
    # near the secondary degenerate band the curvature and dual-section
    # statistics are conditioning-dominated; they stay gated only for the
    # timelike case, whose pairing is bounded away from zero everywhere.
    perturbed_soft = surface.aux.get("perturbed") and \
        kind is not GeometryKind.AFFINE_E3

    has_normal = surface.normal is not None
    if has_normal:
        i_form, ii_form, ff_valid = fundamental_forms(surface)
        h, k, c_ok = curvatures(i_form, ii_form)
        report.fields["H"] = h
        report.fields["K"] = k
        if kind in (GeometryKind.AFFINE_E3, GeometryKind.AFFINE_L3) \
                and not perturbed_soft:
            report.add("mean_curvature", h, tol["mean_curvature"],
                       where=ff_valid & c_ok)
        elif kind is GeometryKind.QUADRIC_H3:
            target = 1.0 / np.sqrt(-surface.params["mu"])
            report.add("mean_curvature", h - target, tol["mean_curvature"],
                       where=ff_valid & c_ok)
        elif kind is GeometryKind.QUADRIC_DESITTER:
            target = 1.0 / np.sqrt(surface.params["mu"])
            report.add("mean_curvature", np.abs(h) - target, tol["mean_curvature"],
                       where=ff_valid & c_ok)
        elif kind is GeometryKind.LW_BRYANT:
            report.add("linear_weingarten",
                       lw_residual(h, k, surface.params["mu"]),
                       tol["linear_weingarten"], where=ff_valid & c_ok)
        if kind is not GeometryKind.LW_BRYANT:
            # z is a conformal coordinate for every construction except the
            # linear Weingarten front itself (only its middle sphere
            # congruence shares the conformal structure of the Gauss map)
            eg, f_res, conf_valid = conformality_residual(surface)
            scale = np.maximum(i_form[..., 0, 0] + i_form[..., 1, 1], 1e-30)
            report.add("conformality", (eg + 2.0 * f_res) / scale,
                       tol["conformality"], where=conf_valid)
    else:
        i_form, _xu, _xv, i_valid = first_form(surface)
        eg, f_res, conf_valid = conformality_residual(surface)
        scale = np.maximum(i_form[..., 0, 0] + i_form[..., 1, 1], 1e-30)
        report.add("conformality", (eg + 2.0 * f_res) / scale, tol["conformality"],
                   where=conf_valid)

    if kind is GeometryKind.QUADRIC_LIGHTCONE:
        i_form, _xu, _xv, i_valid = first_form(surface)
        k_int, k_ok = intrinsic_curvature(i_form, grid)
        report.fields["K_int"] = k_int
        report.add("intrinsic_flatness", k_int, tol["intrinsic_flatness"],
                   where=stencil_valid(surface.mask, radius=2) & k_ok)

    # Marginal trapping is gated where the mean curvature vector has scale
    # (quadrics) or vanishes identically in exact arithmetic (the
    # polynomial-exact isotropic case); linear Weingarten surfaces are
    # envelopes, not marginally trapped, so the check is skipped there.
    if kind in (GeometryKind.AFFINE_ISOTROPIC, GeometryKind.QUADRIC_H3,
                GeometryKind.QUADRIC_DESITTER, GeometryKind.QUADRIC_LIGHTCONE) \
            and not perturbed_soft:
        residual, alignment, mt_ok = marginally_trapped_residual(surface)
        report.add("marginally_trapped", residual, tol["marginally_trapped"],
                   where=mt_ok)
        report.add("gauss_alignment", alignment, tol["gauss_alignment"],
                   where=mt_ok)
    if surface.gauss is not None and kind is not GeometryKind.LW_BRYANT \
            and not perturbed_soft:
        pairing, wedge, ch_valid = christoffel_residual(
            x, surface.gauss, grid, mask=surface.mask)
        # gate the scale-free version: the dual section diverges towards
        # non-immersion loci and would otherwise dominate the raw residual
        with np.errstate(all="ignore"):
            xu, xv = _tangents(x, grid)
            su, sv = _tangents(surface.gauss, grid)
            scale = 1.0 + _enorm(xu) * _enorm(sv) + _enorm(xv) * _enorm(su)
        report.add("christoffel_pairing", pairing / scale,
                   tol["christoffel_pairing"], where=ch_valid)
        report.add("christoffel_wedge", wedge / scale,
                   tol["christoffel_wedge"], where=ch_valid)
    return report
