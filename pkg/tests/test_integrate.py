import math

import numpy as np
import pytest

from minksurf.domain import DomainGrid, sample_data
from minksurf.forms import build_xi
from minksurf.integrate import (FrameSide, PathOrder, integrate_closed_form,
                                iteration_law_defect, path_independence_check,
                                plaquette_residuals, solve_psi)


def test_constant_density_integrates_linearly():
    g = DomainGrid.square(1.0, 11)
    c = 2.0 - 0.5j
    fld, ok = integrate_closed_form(lambda z: np.full_like(z, c), g)
    assert ok.all()
    assert np.max(np.abs(fld - c * g.zs())) < 1e-13


def test_linear_density_exact():
    g = DomainGrid.square(1.0, 41)
    fld, ok = integrate_closed_form(lambda z: z, g)
    iv, iu = g.nearest_index(1 + 1j)
    assert abs(fld[iv, iu] - (1 + 1j) ** 2 / 2) <= 1e-10


def test_base_value_respected():
    g = DomainGrid.square(1.0, 11)
    base = np.array([1.0 + 0j, -2.0 + 0j])
    fld, ok = integrate_closed_form(lambda z: np.stack([z, z * z], axis=-1),
                                    g, base_value=base)
    iv, iu = g.base_index
    assert np.allclose(fld[iv, iu], base)


def test_quadrature_convergence_on_entire_density():
    errs = []
    for n in (11, 21, 41):
        g = DomainGrid.square(1.0, n)
        fld, _ok = integrate_closed_form(np.exp, g)
        expect = np.exp(g.zs()) - 1.0
        errs.append(np.max(np.abs(fld - expect)))
    slope = math.log(errs[0] / errs[2]) / math.log(4.0)
    assert slope >= 3.5


def test_plaquette_residuals_bounded_by_h4():
    for n, half in ((11, 1.0), (21, 1.0)):
        g = DomainGrid.square(half, n)
        loops = plaquette_residuals(np.exp, g)
        h = g.du
        assert np.max(np.abs(loops)) <= 1.0 * h ** 4


def test_mask_blocks_paths():
    g = DomainGrid.square(1.0, 11)
    mask = np.ones(g.shape, dtype=bool)
    mask[7, :] = False  # wall above the base row
    fld, ok = integrate_closed_form(lambda z: np.ones_like(z), g, mask=mask)
    assert not ok[7:, :].any()
    assert ok[:7, :].all()
    assert np.isnan(fld[8, 3])


def test_column_first_order_walks_transposed():
    g = DomainGrid.square(1.0, 11)
    mask = np.ones(g.shape, dtype=bool)
    mask[:, 7] = False  # wall right of the base column blocks COLUMN_FIRST
    _fld, ok = integrate_closed_form(lambda z: np.ones_like(z), g, mask=mask,
                                     order=PathOrder.COLUMN_FIRST)
    assert not ok[:, 7:].any()
    assert ok[:, :7].all()


def test_array_density_is_interpolated():
    g = DomainGrid.square(1.0, 21)
    values = g.zs() ** 2
    fld, ok = integrate_closed_form(values, g)
    expect = g.zs() ** 3 / 3
    assert np.max(np.abs(fld - expect)[ok]) < 1e-12


def test_solve_psi_m_zero_is_constant():
    g = DomainGrid.square(1.0, 9)
    xi = build_xi(sample_data("z", "1", g))
    psi0 = np.array([[2.0, 1.0], [1.0, 1.0]], dtype=complex)
    ff = solve_psi(xi, 0.0, g, psi0, renormalize=False)
    assert np.max(np.abs(ff.values - psi0)) == 0.0


def test_solve_psi_nilpotent_closed_form():
    g = DomainGrid.square(1.0, 11)
    data = sample_data("0", "1", g, eps_crit=0.0)
    ff = solve_psi(build_xi(data), 1.0, g)
    zs = g.zs()
    expect = np.zeros(g.shape + (2, 2), dtype=complex)
    expect[..., 0, 0] = 1.0
    expect[..., 1, 0] = zs
    expect[..., 1, 1] = 1.0
    assert np.max(np.abs(ff.values - expect)) < 1e-13
    assert ff.det_drift < 1e-14


def test_solve_psi_constant_phi_closed_form():
    g = DomainGrid.square(1.0, 11)
    c = 0.5 - 0.25j
    m = 1.5
    data = sample_data(f"0*z + (0.5 - 0.25*i)", "1", g, eps_crit=0.0)
    ff = solve_psi(build_xi(data), m, g)
    zs = g.zs()
    expect = np.zeros(g.shape + (2, 2), dtype=complex)
    expect[..., 0, 0] = 1.0 + m * zs * c
    expect[..., 0, 1] = -m * zs * c * c
    expect[..., 1, 0] = m * zs
    expect[..., 1, 1] = 1.0 - m * zs * c
    assert np.max(np.abs(ff.values - expect)) < 1e-12


def _ode_residual(ff, xi_fn, g, side):
    # central first difference along u equals the equation's right side
    vals = ff.values
    du = g.du
    lhs = (vals[:, 2:, :, :] - vals[:, :-2, :, :]) / (2 * du)
    coeff = xi_fn(g.zs()[:, 1:-1])
    if side is FrameSide.LEFT:
        rhs = -ff.m * coeff @ vals[:, 1:-1]
    else:
        rhs = -ff.m * vals[:, 1:-1] @ coeff
    return np.max(np.abs(lhs - rhs))


def test_frame_side_is_honored():
    g = DomainGrid.square(1.0, 41)
    xi = build_xi(sample_data("z", "1", g))
    left = solve_psi(xi, 1.0, g, side=FrameSide.LEFT)
    right = solve_psi(xi, 1.0, g, side=FrameSide.RIGHT)
    assert np.max(np.abs(left.values - right.values)) > 1e-3
    h2 = g.du ** 2
    assert _ode_residual(left, xi.fn, g, FrameSide.LEFT) < 20 * h2
    assert _ode_residual(right, xi.fn, g, FrameSide.RIGHT) < 20 * h2
    # the wrong side leaves an O(1) residual
    assert _ode_residual(left, xi.fn, g, FrameSide.RIGHT) > 0.05


def test_det_drift_within_tolerance():
    g = DomainGrid.square(1.0, 41)
    xi = build_xi(sample_data("z", "1", g))
    ff = solve_psi(xi, 1.0, g)
    assert ff.det_drift <= 1e-9
    assert np.max(np.abs(ff.values[..., 0, 0] * ff.values[..., 1, 1]
                         - ff.values[..., 0, 1] * ff.values[..., 1, 0] - 1.0)) < 1e-12


def test_det_drift_with_strong_data():
    # coefficient entries up to 10 on the domain, step 0.05
    g = DomainGrid.square(1.0, 41)
    xi = build_xi(sample_data("z", "5", g))
    ff = solve_psi(xi, 1.0, g)
    assert ff.det_drift <= 1e-9


def test_path_independence_trivial_and_flat():
    g = DomainGrid.square(1.0, 21)
    xi = build_xi(sample_data("z", "1", g))
    assert path_independence_check(xi, 0.0, g) == 0.0
    dev = path_independence_check(xi, 1.0, g)
    assert dev <= 1e-7


def test_path_independence_41():
    g = DomainGrid.square(1.0, 41)
    xi = build_xi(sample_data("z", "1", g))
    assert path_independence_check(xi, 1.0, g) <= 1e-7


def test_rk4_global_order():
    # frame error against a substep-refined reference decreases at order 4
    errs = []
    g = DomainGrid.square(1.0, 9)
    xi = build_xi(sample_data("z", "1", g))
    ref = solve_psi(xi, 1.0, g, substeps=64).values
    for sub in (2, 4, 8):
        errs.append(np.max(np.abs(solve_psi(xi, 1.0, g, substeps=sub).values - ref)))
    order = math.log(errs[0] / errs[2]) / math.log(4.0)
    assert 3.5 <= order <= 4.5


def test_iteration_law_defect():
    g = DomainGrid.square(1.0, 41)
    xi = build_xi(sample_data("z", "1", g))
    assert iteration_law_defect(xi, 0.5, 0.5, g) <= 1e-6
    assert iteration_law_defect(xi, 0.0, 0.0, g) <= 1e-12


def test_masked_region_blocks_frames():
    g = DomainGrid.square(1.0, 11, base=1 + 1j)
    data = sample_data("1/z", "1", g)
    xi = build_xi(data)
    ff = solve_psi(xi, 1.0, g)
    iv, iu = g.nearest_index(0j)
    assert not ff.valid[iv, iu]
    assert ff.valid[g.base_index]


def test_substeps_must_be_even():
    g = DomainGrid.square(1.0, 5)
    with pytest.raises(ValueError):
        integrate_closed_form(lambda z: z, g, substeps=3)


def test_iteration_law_survives_masked_data():
    g = DomainGrid.square(1.0, 11, base=1 + 1j)
    xi = build_xi(sample_data("1/z", "1", g))
    defect = iteration_law_defect(xi, 0.5, 0.5, g)
    assert np.isfinite(defect)


def test_coupled_integrals_transpose_consistently():
    # the same flat transport walked in either staircase order agrees
    from minksurf.surfaces import uy_perturb
    g = DomainGrid.square(1.0, 21)
    a = uy_perturb(sample_data("z", "1", g), 1.0, -1.0)
    b = uy_perturb(sample_data("z", "1", g), 1.0, -1.0, order=PathOrder.COLUMN_FIRST)
    sel = a.mask & b.mask
    assert sel.any()
    assert np.nanmax(np.abs(a.x - b.x)[sel]) < 1e-9
