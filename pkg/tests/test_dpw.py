import numpy as np
import pytest

from nilweier.dpw import (
    align_rigid,
    conformality_residual,
    dirac_residual,
    frame_at,
    frame_grid,
    integrate,
    lorentz_inner,
    mean_curvature_nil3,
    metric_factor,
    normal_from_gauss_map,
    spinors_from_frame,
    su11_coordinates,
    su11_matrix,
    surface_quantities,
    sym_L3,
    sym_nil,
)
from nilweier.equivariant import Monodromy, diagonalizer, translation_oracle
from nilweier.errors import CellMismatch, DegenerateMetric, NumericError, VerticalPoint
from nilweier.factorization import Cell
from nilweier.loop_core import SIGMA3, TwistedLoop, exp_degree_one, identity_loop, omega0
from nilweier.nil3 import Isometry, iso_apply
from nilweier.potentials import CallbackPotential, DegreeOnePotential

TRANS = DegreeOnePotential(1, -1, 0)
HEL = DegreeOnePotential(1, 0.2 + 0.3j, 2)


def _zero_potential():
    return CallbackPotential(lambda z: TwistedLoop.from_dict({}))


def test_integrate_zero_potential_keeps_initial_value():
    C0 = exp_degree_one(HEL, 0.3)
    C = integrate(_zero_potential(), [0, 0.4 + 0.2j], C0)
    assert C.max_abs_diff(C0) <= 1e-14


def test_integrate_exact_branch():
    C = integrate(HEL, [0.1, 0.6])
    assert C.max_abs_diff(exp_degree_one(HEL, 0.5)) <= 1e-14


def test_rk_branch_matches_exact_exponential():
    as_callback = CallbackPotential(lambda z: HEL.loop())
    path = [0, 0.3, 0.3 + 0.25j]
    rk = integrate(as_callback, path)
    assert rk.max_abs_diff(exp_degree_one(HEL, 0.3 + 0.25j)) <= 1e-9


def test_rk_branch_with_z_dependent_potential():
    # eta = z A with constant A integrates to exp(z^2/2 A)
    A = HEL.loop()
    eta = CallbackPotential(lambda z: A.scale(z))
    z = 0.4 + 0.3j
    rk = integrate(eta, [0, z])
    assert rk.max_abs_diff(exp_degree_one(HEL, z * z / 2)) <= 1e-9


def test_frame_grid_of_zero_potential_is_identity():
    xs = ys = np.linspace(-0.2, 0.2, 3)
    fg = frame_grid(_zero_potential(), xs, ys)
    for row in fg.results:
        for res in row:
            assert res.F.max_abs_diff(identity_loop()) <= 1e-14


def test_translation_grid_stays_in_cell_e():
    xs = ys = np.linspace(-0.5, 0.5, 5)
    fg = frame_grid(TRANS, xs, ys)
    assert np.all(fg.cells == Cell.E.value)


def test_helicoidal_frames_follow_the_monodromy():
    S = diagonalizer(HEL)
    M = Monodromy(HEL, S)
    t, z = 0.3, 0.1 + 0.05j
    F0 = frame_at(HEL, z, S).F
    F1 = frame_at(HEL, z + t, S).F
    assert F1.max_abs_diff(M.at(t) @ F0) <= 1e-9


def test_numeric_errors_carry_the_grid_location():
    def coef(z):
        if z.real > 0.05:
            raise NumericError("synthetic failure")
        return TwistedLoop.from_dict({})

    with pytest.raises(NumericError, match="grid point iy=0, ix=2"):
        frame_grid(CallbackPotential(coef), [0.0, 0.05, 0.1], [0.0, 0.1])


def test_thread_count_does_not_change_results(monkeypatch):
    xs = ys = np.linspace(-0.1, 0.1, 3)
    serial = frame_grid(HEL, xs, ys, diagonalizer(HEL))
    monkeypatch.setenv("NILWEIER_THREADS", "3")
    threaded = frame_grid(HEL, xs, ys, diagonalizer(HEL))
    for r1, r2 in zip(serial.results, threaded.results):
        for a, b in zip(r1, r2):
            assert np.array_equal(a.F.coeffs, b.F.coeffs)


def test_su11_basis_round_trip_and_metric():
    x = np.array([0.3, -1.1, 0.7])
    assert np.allclose(su11_coordinates(su11_matrix(x)), x)
    basis = [su11_matrix(e) for e in np.eye(3)]
    gram = [[lorentz_inner(a, b) for b in basis] for a in basis]
    assert np.allclose(gram, np.diag([1, 1, -1]))


def test_sym_of_identity():
    f, N = sym_L3(identity_loop())
    assert np.allclose(f, -0.5j * SIGMA3) and np.allclose(N, 0.5j * SIGMA3)
    assert np.all(sym_nil(identity_loop()) == 0)


def test_constant_dressing_acts_by_adjoint():
    F = frame_at(TRANS, 0.2 + 0.1j, identity_loop()).F
    R = np.array([[np.cosh(0.4), np.sinh(0.4)], [np.sinh(0.4), np.cosh(0.4)]])
    f, N = sym_L3(F)
    fR, NR = sym_L3(F.left(R))
    Ri = np.linalg.inv(R)
    assert np.allclose(fR, R @ f @ Ri, atol=1e-12)
    assert np.allclose(NR, R @ N @ Ri, atol=1e-12)


def test_normal_is_unit_timelike():
    for z in (0, 0.2 - 0.1j):
        _, N = sym_L3(frame_at(TRANS, z, identity_loop()).F)
        assert lorentz_inner(N, N) == pytest.approx(-1, abs=1e-12)


def test_associated_family_samples_are_finite():
    F = frame_at(HEL, 0.1 + 0.1j, diagonalizer(HEL)).F
    pts = [sym_nil(F, lam=np.exp(2j * np.pi * k / 8)) for k in range(8)]
    assert np.all(np.isfinite(pts))


def test_cell_mismatch():
    with pytest.raises(CellMismatch):
        sym_nil(identity_loop(), Cell.OMEGA)
    sym_nil(omega0(), Cell.OMEGA)


def _translation_spinors(x, y):
    # normalization of the pipeline: h = 4 on the p = 0 translation surface
    c, s = np.cosh(2 * y), np.sinh(2 * y)
    return 1j * np.sqrt(2) * c + 0 * x, 1j * np.sqrt(2) * s + 0 * x


def test_spinors_on_the_translation_surface():
    ys = np.linspace(-0.2, 0.2, 5)
    fg = frame_grid(TRANS, [0.0], ys)
    for iy, y in enumerate(ys):
        psi1, psi2 = spinors_from_frame(fg, iy, 0)
        e1, e2 = _translation_spinors(0.0, y)
        assert psi1 == pytest.approx(e1, abs=1e-9)
        assert psi2 == pytest.approx(e2, abs=1e-9)


def test_spinor_data_at_the_origin():
    fg = frame_grid(TRANS, [0.0], [0.0])
    psi1, psi2 = spinors_from_frame(fg, 0, 0)
    assert abs(psi2) <= 1e-12
    q = surface_quantities(np.array([psi1]), np.array([psi2]), 1, 1)
    assert q["h"][0] == pytest.approx(4) and np.sqrt(q["e_u"][0]) / 2 * 2 == pytest.approx(4)


def test_surface_quantities_examples():
    psi1 = np.array([1 + 1j, 0.5j])
    q = surface_quantities(psi1, np.zeros(2), 1, 1)
    assert np.all(q["g"] == 0)
    assert np.allclose(q["h"], 2 * np.abs(psi1) ** 2)
    assert np.allclose(q["U_dirac"], 0.25j * q["h"])
    with pytest.raises(VerticalPoint):
        surface_quantities(np.array([1.0]), np.array([1.0]), 1, 1)


def _spinor_grid(h):
    xs = np.arange(-0.1, 0.1 + h / 2, h)
    X, Y = np.meshgrid(xs, xs)
    return _translation_spinors(X, Y)


def test_dirac_residual_converges_at_order_two():
    r1 = dirac_residual(*_spinor_grid(2e-3), 2e-3, 2e-3)
    r2 = dirac_residual(*_spinor_grid(1e-3), 1e-3, 1e-3)
    assert r1 <= 1e-4
    assert r1 / r2 == pytest.approx(4, abs=0.5)


def test_constant_spinor_is_not_a_dirac_solution():
    psi1 = np.full((4, 4), 1 + 0j)
    assert dirac_residual(psi1, np.zeros((4, 4)), 0.1, 0.1) == pytest.approx(0.5)


def test_abresch_rosenberg_coefficient_is_holomorphic():
    h = 1e-3
    psi1, psi2 = _spinor_grid(h)
    B = surface_quantities(psi1, psi2, h, h)["Bcoef"]
    dbar = 0.25 * ((B[1:-1, 2:] - B[1:-1, :-2]) / h + 1j * (B[2:, 1:-1] - B[:-2, 1:-1]) / h)
    assert np.max(np.abs(dbar)) <= 1e-4


def _sample(fn, h=1e-2, n=11):
    u = np.arange(n) * h - (n // 2) * h
    U, V = np.meshgrid(u, u)
    return np.stack(fn(U, V), axis=-1)


def test_planes_are_minimal():
    vertical = _sample(lambda u, v: (u, 0.7 * u, v))
    assert np.max(np.abs(mean_curvature_nil3(vertical, 1e-2, 1e-2))) <= 1e-10
    horizontal = _sample(lambda u, v: (u, v, 0 * u))
    assert np.max(np.abs(mean_curvature_nil3(horizontal, 1e-2, 1e-2))) <= 1e-10


def test_umbrella_is_not_an_admissible_sample():
    with pytest.raises(DegenerateMetric):
        mean_curvature_nil3(_sample(lambda u, v: (u, 0 * u, 0 * u)), 1e-2, 1e-2)


def test_non_minimal_graph_is_detected():
    bowl = _sample(lambda u, v: (u, v, u**2 + v**2))
    assert np.max(np.abs(mean_curvature_nil3(bowl, 1e-2, 1e-2))) > 0.5


def test_translation_oracle_is_conformal_and_minimal():
    h = 2e-3
    f = _sample(lambda x, y: translation_oracle(0.3, x + 1j * y)[0], h=h, n=21)
    conf, eq = conformality_residual(f, h, h)
    assert conf <= 1e-4 and eq <= 1e-4
    assert np.max(np.abs(mean_curvature_nil3(f, h, h))) <= 1e-4


def test_metric_factor_of_the_oracle():
    h = 1e-3
    f = _sample(lambda x, y: translation_oracle(0.0, x + 1j * y)[0], h=h, n=5)
    y = (np.arange(5) - 2) * h
    expected = 4 * np.cosh(4 * y[1:-1])[:, None]
    assert np.allclose(metric_factor(f, h, h), expected, rtol=1e-5)


def test_normal_from_gauss_map():
    for g in (0, 0.3 - 0.4j, 0.9j):
        n = normal_from_gauss_map(complex(g))
        assert np.linalg.norm(n) == pytest.approx(1)
    assert np.allclose(normal_from_gauss_map(0j), [0, 0, 1])


def test_align_rigid_recovers_a_known_motion(rng):
    pts = rng.normal(size=(30, 3))
    rho = Isometry([0.3, -0.8, 1.2], 0.9)
    fitted, err = align_rigid(pts, iso_apply(rho, pts))
    assert err <= 1e-12 and fitted.distance(rho) <= 1e-12
