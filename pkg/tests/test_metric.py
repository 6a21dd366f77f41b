import numpy as np
import pytest

from pdflow import (ConvexQuadraticProgram, MetricNotPositiveDefinite, build_metric,
                    certify_strong_monotonicity, choose_k, estimate_lipschitz, make_random_qp,
                    metric_gradient, metric_gradient_matvec, spectral_bounds)
from pdflow.dynamics import project_domain_metric
from pdflow.linalg import EigenSolverError, jacobi_eigh, power_iteration
from pdflow.metric import metric_jacobian, metric_monotonicity_gap, threshold_rho, threshold_terms
from pdflow.oracle import active_set_solve

from conftest import general_qp


@pytest.mark.parametrize("seed", range(20))
def test_block_formula_matches_matvec(seed):
    p = general_qp(seed)
    spec = choose_k(p, 3.0)
    z = np.random.default_rng(seed).standard_normal(p.n + p.m)
    a, b = metric_gradient(p, spec, z), metric_gradient_matvec(p, spec, z)
    assert np.linalg.norm(a - b) <= 1e-12 * max(1.0, np.linalg.norm(b))


def test_metric_jacobian_blocks(example1):
    p = example1
    spec = choose_k(p)
    k, H, A = spec.k, p.H, p.A
    expected = np.block([[k * H - A.T @ A, k * A.T], [A @ H - k * A, A @ A.T]])
    assert np.allclose(metric_jacobian(p, spec), expected, rtol=0, atol=1e-12 * k * 20)


def test_positive_definite_boundary(example1):
    q1, q2 = spectral_bounds(example1.A)
    edge = np.sqrt(q2)
    spec = build_metric(example1, edge * (1 + 1e-3))
    assert np.all(np.linalg.eigvalsh(spec.metric_inverse) > 0)
    for k in (edge, edge * (1 - 1e-3), 0.0, -1.0):
        with pytest.raises(MetricNotPositiveDefinite, match="metric not positive definite"):
            build_metric(example1, k)


def test_r_norm_helpers(example1):
    spec = choose_k(example1, 2.0)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 15))
    R = np.linalg.inv(spec.metric_inverse)
    assert spec.inner(u, v) == pytest.approx(u @ R @ v, rel=1e-10)
    assert spec.norm(u) ** 2 == pytest.approx(u @ R @ u, rel=1e-10)
    assert np.allclose(spec.metric, R, atol=1e-12)
    assert np.allclose(spec.apply_metric(u), R @ u, atol=1e-12)


# Scalar program min x^2 s.t. x <= -1: q1 = q2 = 1, rho = 1.75
def test_tiny_threshold(tiny):
    terms = threshold_terms(tiny)
    assert terms["lambda_max_sym"] == pytest.approx(1.75, abs=1e-12)
    assert terms["spectral_radius"] == pytest.approx(1.75, abs=1e-12)
    spec = choose_k(tiny)
    assert spec.rho == pytest.approx(1.75, abs=1e-12)
    assert spec.k == pytest.approx(1.75 * (1 + 1e-6), rel=1e-15)


@pytest.mark.parametrize("k,nu,ell", [
    (2.0, 2.0 - np.sqrt(2.0), 4.64575131106459),
    (10.0, 0.9446148618625834, 24.10673597966589),
])
def test_tiny_certificate_values(tiny, k, nu, ell):
    cert = certify_strong_monotonicity(tiny, build_metric(tiny, k))
    assert cert.passed
    assert cert.nu == pytest.approx(nu, abs=1e-10)
    assert cert.ell == pytest.approx(ell, rel=1e-10)
    # sym(grad G_r) = [[2k - 1, 1], [1, 1]]
    J = metric_jacobian(tiny, build_metric(tiny, k))
    assert cert.nu == pytest.approx(np.linalg.eigvalsh(0.5 * (J + J.T))[0], abs=1e-12)


def test_tiny_lipschitz_dominates_sampled_ratios(tiny):
    spec = build_metric(tiny, 2.0)
    ell = estimate_lipschitz(tiny, spec)
    J = metric_jacobian(tiny, spec)
    ratios = []
    for deg in range(360):
        t = np.deg2rad(deg)
        v = np.array([np.cos(t), np.sin(t)])
        ratios.append(spec.norm(J @ v) / spec.norm(v))
    assert max(ratios) <= ell * (1 + 1e-12)
    assert max(ratios) == pytest.approx(ell, rel=1e-3)


@pytest.mark.parametrize("seed", range(10))
def test_lipschitz_bounds_random_pairs(seed):
    p = general_qp(seed)
    spec = choose_k(p)
    ell = estimate_lipschitz(p, spec)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        z1, z2 = rng.standard_normal((2, p.n + p.m))
        dg = metric_gradient(p, spec, z1) - metric_gradient(p, spec, z2)
        assert spec.norm(dg) <= ell * spec.norm(z1 - z2) * (1 + 1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_certificate_measures_nu(seed):
    p = general_qp(seed)
    spec = choose_k(p)
    cert = certify_strong_monotonicity(p, spec)
    J = metric_jacobian(p, spec)
    assert cert.nu == pytest.approx(np.linalg.eigvalsh(0.5 * (J + J.T))[0], rel=1e-8, abs=1e-9)
    assert cert.passed == (cert.nu > 0)
    d = cert.to_dict()
    assert set(d) == {"k", "q1", "q2", "rho", "nu", "ell", "nu_ge_q1_half", "passed"}
    assert np.isfinite(d["rho"]) and d["k"] > d["rho"]


def test_euclidean_gap_of_metric_gradient_is_bounded_by_nu(example1):
    spec = choose_k(example1)
    cert = certify_strong_monotonicity(example1, spec)
    rng = np.random.default_rng(5)
    for _ in range(500):
        z1, z2 = rng.standard_normal((2, 15))
        gap = metric_monotonicity_gap(example1, spec, z1, z2, inner="euclidean")
        assert gap >= cert.nu * np.sum((z1 - z2) ** 2) - 1e-9
    with pytest.raises(ValueError):
        metric_monotonicity_gap(example1, spec, z1, z2, inner="bogus")


def test_r_inner_gap_is_primal_only():
    # <dG_r, dz>_r collapses to dx^T H dx: zero along pure multiplier moves
    p = make_random_qp(1, 10, 5)
    spec = choose_k(p)
    dz = np.zeros(15)
    dz[10:] = 1.0
    assert abs(metric_monotonicity_gap(p, spec, dz, np.zeros(15), inner="r")) <= 1e-9
    rng = np.random.default_rng(2)
    z1, z2 = rng.standard_normal((2, 15))
    dx = (z1 - z2)[:10]
    assert metric_monotonicity_gap(p, spec, z1, z2) == pytest.approx(dx @ p.H @ dx, rel=1e-8)


def test_spectral_bounds_rejects_rank_deficiency():
    with pytest.raises(ValueError, match="full row rank"):
        spectral_bounds(np.array([[1.0, 1.0], [2.0, 2.0]]))


def test_threshold_rho_dominates_sqrt_q2():
    for seed in range(10):
        p = general_qp(seed)
        q1, q2 = spectral_bounds(p.A)
        assert threshold_rho(p) >= np.sqrt(q2)


# eigen solver
@pytest.mark.parametrize("n", [1, 2, 5, 17, 40])
@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_jacobi_matches_lapack(n, backend):
    from pdflow import HAVE_COMPILED
    if backend == "compiled" and not HAVE_COMPILED:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(n)
    B = rng.standard_normal((n, n))
    S = B + B.T
    w, V = jacobi_eigh(S, vectors=True, backend=backend)
    assert np.allclose(w, np.linalg.eigvalsh(S), atol=1e-11 * max(1, np.abs(S).max()))
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)
    assert np.allclose(S @ V, V * w, atol=1e-10)


def test_jacobi_large_entries_relative_accuracy():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((30, 30))
    S = 1e10 * (B @ B.T) + np.eye(30)
    w = jacobi_eigh(S)
    ref = np.linalg.eigvalsh(S)
    assert np.allclose(w, ref, rtol=0, atol=1e-11 * ref[-1])


def test_jacobi_errors():
    with pytest.raises(ValueError, match="not symmetric"):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))
    S = np.array([[1.0, 0.5, 0.2], [0.5, 2.0, 0.3], [0.2, 0.3, 3.0]])
    with pytest.raises(EigenSolverError):
        jacobi_eigh(S, max_sweeps=1)


def test_power_iteration_spectral_radius():
    M = np.array([[2.0, 1.0], [0.0, 3.0]])
    assert power_iteration(M) == pytest.approx(3.0, rel=1e-10)


# r-projection
@pytest.mark.parametrize("seed", range(6))
def test_r_projection_solves_the_projection_qp(seed):
    p = general_qp(seed)
    spec = choose_k(p, 2.0)
    n, m = p.n, p.m
    w = 3 * np.random.default_rng(seed).standard_normal(n + m)
    R = np.linalg.inv(spec.metric_inverse)
    R = 0.5 * (R + R.T)
    # min 1/2 (y - w)^T R (y - w) s.t. -lam <= 0, solved by the active-set oracle
    cons = np.hstack([np.zeros((m, n)), -np.eye(m)])
    proj_qp = ConvexQuadraticProgram(H=R, c=-R @ w, A=cons, b=np.zeros(m))
    ref = active_set_solve(proj_qp).x_star
    got = project_domain_metric(p, spec, w)
    assert np.allclose(got, ref, atol=1e-8)
    assert np.all(got[n:] >= 0)
    assert np.allclose(project_domain_metric(p, spec, got), got, atol=1e-12)
