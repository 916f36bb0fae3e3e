import numpy as np
import pytest

from minksurf.domain import DomainGrid, sample_data
from minksurf.fd import central_diff, stencil_valid
from minksurf.integrate import FrameField, FrameSide, PathOrder
from minksurf.minkowski import E0, E1, E3, ip31
from minksurf.surfaces import (GeometryKind, TargetGeometry, gauss_lift,
                               h_frame_check, make_affine_surface, make_lw_bryant,
                               make_quadric_surface, secondary_form,
                               secondary_gauss, uy_perturb)


def test_gauss_lift_values():
    assert np.allclose(gauss_lift(0.0), E0 - E3)
    assert np.allclose(gauss_lift(1.0), 2 * E0 + 2 * E1)


def test_gauss_lift_null_and_hermitian_rank_one():
    rng = np.random.default_rng(2)
    phi = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    g = gauss_lift(phi)
    assert np.max(np.abs(ip31(g, g))) < 1e-10 * (1 + np.max(np.abs(phi)) ** 4)
    from minksurf.minkowski import herm_from_vec
    h = herm_from_vec(g)
    v = np.stack([phi, np.ones_like(phi)], axis=-1)
    vv = 2 * v[..., :, None] * np.conj(v[..., None, :])
    assert np.max(np.abs(h - vv)) < 1e-12 * (1 + np.max(np.abs(vv)))


def test_target_geometry_validation():
    TargetGeometry(GeometryKind.AFFINE_E3, p=(1, 0, 0, 0))
    TargetGeometry(GeometryKind.QUADRIC_H3, mu=-1.0, m=1.0)
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.AFFINE_E3, p=(0, 1, 0, 0))  # spacelike p
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.AFFINE_E3, p=None)
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.QUADRIC_H3, mu=1.0)  # wrong sign
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.QUADRIC_DESITTER, mu=-1.0)
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.QUADRIC_H3, mu=-1.0, m=0.0)
    with pytest.raises(ValueError):
        TargetGeometry(GeometryKind.LW_BRYANT, mu=0.5, m=0.0)


ENNEPER_CASES = [
    (1 + 0j, np.array([0.0, 2.0 / 3.0, 0.0, 1.0])),
    (1j, np.array([0.0, 0.0, -2.0 / 3.0, -1.0])),
]


@pytest.mark.parametrize("z,expect", ENNEPER_CASES)
def test_affine_enneper_values(z, expect):
    g = DomainGrid.square(1.0, 41)
    data = sample_data("z", "1", g)
    s = make_affine_surface(data, E0)
    iv, iu = g.nearest_index(z)
    assert np.max(np.abs(s.x[iv, iu] - expect)) < 1e-12


def test_affine_rejects_zero_normal():
    g = DomainGrid.square(1.0, 9)
    data = sample_data("z", "1", g)
    with pytest.raises(ValueError):
        make_affine_surface(data, np.zeros(4))


def test_affine_kinds_and_normals():
    g = DomainGrid.square(1.0, 21)
    data = sample_data("z", "1", g)
    e0s = make_affine_surface(data, E0)
    assert e0s.kind is GeometryKind.AFFINE_E3
    assert e0s.normal is not None
    e3s = make_affine_surface(data, E3)
    assert e3s.kind is GeometryKind.AFFINE_L3
    iso = make_affine_surface(data, (E0 + E3) / 2)
    assert iso.kind is GeometryKind.AFFINE_ISOTROPIC
    assert iso.normal is None


def test_affine_hyperplane_constraint_exact():
    g = DomainGrid.square(1.0, 21)
    data = sample_data("z^2 + z", "exp(z)", g, eps_crit=1e-12)
    p = np.array([1.0, 0.2, -0.3, 0.1])  # timelike
    s = make_affine_surface(data, p)
    lev = ip31(s.x, p)
    assert np.nanmax(np.abs(lev - lev[g.base_index])) < 1e-12


def test_affine_gauss_pairing_is_minus_one():
    g = DomainGrid.square(1.0, 11)
    data = sample_data("z", "1", g)
    s = make_affine_surface(data, E0)
    assert np.nanmax(np.abs(ip31(s.gauss, E0) + 1.0)) < 1e-12


def test_affine_degenerate_circle_masked():
    g = DomainGrid.square(1.0, 41)
    data = sample_data("z", "1", g)
    s = make_affine_surface(data, E3)
    iv, iu = g.nearest_index(1.0 + 0j)  # |z| = 1 is the degenerate set
    assert not s.mask[iv, iu]
    assert s.mask[g.base_index]


def test_quadric_smoke_horosphere():
    g = DomainGrid.square(1.0, 21)
    data = sample_data("0", "1", g, eps_crit=0.0)
    s = make_quadric_surface(data, 1.0, -1.0)
    zs = g.zs()
    expect = np.stack([1 + np.abs(zs) ** 2 / 2, zs.real, -zs.imag,
                       -np.abs(zs) ** 2 / 2], axis=-1)
    assert np.nanmax(np.abs(s.x - expect)) < 1e-12
    assert np.nanmax(np.abs(ip31(s.x, s.x) + 1.0)) < 1e-12


def test_quadric_base_value_and_lightcone():
    g = DomainGrid.square(1.0, 15)
    data = sample_data("z", "1", g)
    for mu in (-1.0, -0.3, 0.0, 0.7, 1.0):
        s = make_quadric_surface(data, 1.0, mu)
        iv, iu = g.base_index
        expect = 0.5 * np.array([1 - mu, 0.0, 0.0, 1 + mu])
        assert np.allclose(s.x[iv, iu], expect, atol=1e-13)
        assert np.nanmax(np.abs(ip31(s.x, s.x) - mu)[s.mask]) < 1e-12


def test_quadric_rejects_zero_m():
    g = DomainGrid.square(1.0, 9)
    data = sample_data("z", "1", g)
    with pytest.raises(ValueError):
        make_quadric_surface(data, 0.0, -1.0)


def test_quadric_normal_is_unit_and_orthogonal():
    g = DomainGrid.square(1.0, 15)
    data = sample_data("z", "1", g)
    s = make_quadric_surface(data, 1.0, -1.0)
    nn = ip31(s.normal, s.normal)
    nx = ip31(s.normal, s.x)
    assert np.nanmax(np.abs(nn - 1.0)[s.mask]) < 1e-10
    assert np.nanmax(np.abs(nx)[s.mask]) < 1e-10


def test_uy_hyperplane_and_kind():
    g = DomainGrid.square(1.0, 21)
    data = sample_data("z", "1", g)
    for mu, kind in ((-1.0, GeometryKind.AFFINE_E3), (1.0, GeometryKind.AFFINE_L3),
                     (0.0, GeometryKind.AFFINE_ISOTROPIC)):
        s = uy_perturb(data, 1.0, mu)
        assert s.kind is kind
        c = np.asarray(s.params["p"])
        lev = ip31(s.x, c)
        assert np.nanmax(np.abs(lev - lev[g.base_index])[s.mask]) < 1e-9


def test_uy_m_scaling_oracle():
    # solving with parameter m equals solving with parameter 1 and the
    # 1-form scaled by m (the parameter is a scaling of the Hopf data)
    g = DomainGrid.square(1.0, 15)
    a = uy_perturb(sample_data("z", "1", g), 2.0, -1.0)
    b = uy_perturb(sample_data("z", "2", g), 1.0, -1.0)
    sel = a.mask & b.mask
    assert np.nanmax(np.abs(a.x - b.x)[sel]) < 1e-11


def test_secondary_gauss_identity_frame():
    g = DomainGrid.square(1.0, 9)
    vals = np.broadcast_to(np.eye(2, dtype=complex), g.shape + (2, 2)).copy()
    frame = FrameField(grid=g, values=vals, valid=np.ones(g.shape, bool), m=1.0,
                       side=FrameSide.LEFT, det_drift=0.0, order=PathOrder.ROW_FIRST)
    phi = g.zs() ** 2
    psi, ok = secondary_gauss(frame, phi)
    assert ok.all()
    assert np.allclose(psi, phi)


def test_secondary_gauss_moebius_formula():
    g = DomainGrid.square(1.0, 9)
    zs = g.zs()
    vals = np.zeros(g.shape + (2, 2), dtype=complex)
    vals[..., 0, 0] = 1.0
    vals[..., 1, 0] = zs
    vals[..., 1, 1] = 1.0
    frame = FrameField(grid=g, values=vals, valid=np.ones(g.shape, bool), m=1.0,
                       side=FrameSide.LEFT, det_drift=0.0, order=PathOrder.ROW_FIRST)
    phi = np.full(g.shape, 0.3 + 0.1j)
    psi, ok = secondary_gauss(frame, phi)
    expect = phi / (1 - zs * phi)
    assert np.max(np.abs(psi - expect)[ok]) < 1e-12


def test_secondary_gauss_is_holomorphic():
    # Cauchy-Riemann residual of the sampled secondary function is O(h^2)
    res = []
    for n in (21, 41):
        g = DomainGrid.square(1.0, n)
        data = sample_data("z", "1", g)
        q = make_quadric_surface(data, 1.0, -1.0)
        psi, ok = secondary_gauss(q.aux["frame"], data.phi)
        du_ = central_diff(psi, g.du, axis=1)
        dv_ = central_diff(psi, g.dv, axis=0)
        cr = du_ + 1j * dv_  # d/dx + i d/dy kills holomorphic samples
        sel = stencil_valid(ok, radius=2)
        res.append(np.nanmax(np.abs(cr)[sel]))
    assert res[0] < 1e-3
    assert res[1] < 0.3 * res[0]


def test_secondary_form_consistent_with_gauss():
    g = DomainGrid.square(1.0, 15)
    data = sample_data("z", "1", g)
    q = make_quadric_surface(data, 1.0, -1.0)
    psi_a, ok = secondary_gauss(q.aux["frame"], data.phi)
    psi_b, eta = secondary_form(q.aux["frame"], data)
    assert np.nanmax(np.abs(psi_a - psi_b)[ok]) < 1e-10
    assert np.isfinite(eta[ok]).all()


def test_lw_psi_zero_gives_hyperbolic_unit():
    g = DomainGrid.square(1.0, 15)
    for mu in (-1.0, -0.5, 0.0, 0.5):
        s, mid = make_lw_bryant("0", "1", 1.0, mu, g)
        psi_m = s.aux["frame"].values
        psi_star = np.conj(np.swapaxes(psi_m, -1, -2))
        direct = psi_m @ psi_star
        from minksurf.minkowski import vec_from_herm_unchecked
        assert np.nanmax(np.abs(s.x - vec_from_herm_unchecked(direct))[s.mask]) < 1e-12
        assert np.nanmax(np.abs(ip31(s.x, s.x) + 1.0)[s.mask]) < 1e-11


def test_lw_mu_minus_one_is_frame_square():
    g = DomainGrid.square(1.0, 15)
    s, _mid = make_lw_bryant("z", "0.3", 1.0, -1.0, g)
    psi_m = s.aux["frame"].values
    psi_star = np.conj(np.swapaxes(psi_m, -1, -2))
    from minksurf.minkowski import vec_from_herm_unchecked
    expect = vec_from_herm_unchecked(psi_m @ psi_star)
    assert np.nanmax(np.abs(s.x - expect)[s.mask]) < 1e-12


def test_lw_middle_sphere_relation():
    g = DomainGrid.square(0.8, 21)
    for mu in (-0.5, 0.0, 0.5):
        s, mid = make_lw_bryant("z", "0.3", 1.0, mu, g)
        recon = mid.x + 0.5 * (mu + 1.0) * s.gauss
        assert np.nanmax(np.abs(s.x - recon)[s.mask]) < 1e-12
        assert np.nanmax(np.abs(ip31(mid.x, mid.x) - mu)[mid.mask]) < 1e-12
        assert mid.kind is (GeometryKind.QUADRIC_H3 if mu < 0 else
                            GeometryKind.QUADRIC_DESITTER if mu > 0 else
                            GeometryKind.QUADRIC_LIGHTCONE)


def test_lw_pole_masking():
    g = DomainGrid.square(1.5, 31)
    s, _mid = make_lw_bryant("z", "0.3", 1.0, 0.5, g, eps_pole=1e-2)
    zs = g.zs()
    near = np.abs(1.0 - 0.5 * np.abs(zs) ** 2) < 5e-3
    assert not s.mask[near].any()


def test_lw_gauss_pairing():
    g = DomainGrid.square(0.8, 21)
    s, _ = make_lw_bryant("z", "0.3", 1.0, -0.5, g)
    pairing = ip31(s.gauss, s.x)
    assert np.nanmax(np.abs(pairing + 1.0)[s.mask]) < 1e-11


def test_lw_rejects_zero_m():
    g = DomainGrid.square(1.0, 9)
    with pytest.raises(ValueError):
        make_lw_bryant("z", "0.3", 0.0, -1.0, g)


def test_h_frame_check_small_and_det_one():
    g = DomainGrid.square(0.8, 41)
    s, _ = make_lw_bryant("z", "0.3", 1.0, -0.5, g)
    res = h_frame_check(s.aux["frame"], "z", "0.3", 1.0)
    assert res < 5e-4
    # the companion matrix has unit determinant by construction
    psi_m = s.aux["frame"].values
    hmat = np.zeros_like(psi_m)
    hmat[..., 0, 0] = 1j * g.zs()
    hmat[..., 0, 1] = 1j
    hmat[..., 1, 0] = 1j
    hmat = psi_m @ hmat
    det = hmat[..., 0, 0] * hmat[..., 1, 1] - hmat[..., 0, 1] * hmat[..., 1, 0]
    assert np.nanmax(np.abs(det - 1.0)[s.mask]) < 1e-11


def test_h_frame_residual_refines_quadratically():
    res = []
    for n in (21, 41):
        g = DomainGrid.square(0.8, n)
        s, _ = make_lw_bryant("z", "0.3", 1.0, 0.0, g)
        res.append(h_frame_check(s.aux["frame"], "z", "0.3", 1.0))
    assert res[1] < 0.35 * res[0]


def test_h_frame_psi_zero_lower_left():
    g = DomainGrid.square(1.0, 21)
    s, _ = make_lw_bryant("0", "1", 1.0, -1.0, g)
    frame = s.aux["frame"]
    psi_m = frame.values
    hmat = np.zeros_like(psi_m)
    hmat[..., 0, 1] = 1j
    hmat[..., 1, 0] = 1j
    hmat = psi_m @ hmat
    hu = central_diff(hmat, g.du, axis=1)
    inv = np.linalg.inv(hmat[2:-2, 2:-2])
    lower_left = (inv @ hu[2:-2, 2:-2])[..., 1, 0]
    assert np.nanmax(np.abs(lower_left)) < 1e-10
