import json

import numpy as np
import pytest

from pdflow import ConvexQuadraticProgram, PrimalDualPoint, make_l2_least_squares, make_random_qp, validate
from pdflow.problem import all_passed, as_vector


def test_random_qp_is_seed_determined():
    p, q = make_random_qp(3, 8, 4), make_random_qp(3, 8, 4)
    assert np.array_equal(p.A, q.A) and np.array_equal(p.b, q.b)
    assert not np.array_equal(p.A, make_random_qp(4, 8, 4).A)


def test_random_qp_structure():
    p = make_random_qp(1, 10, 5, hessian_scale=20.0)
    assert np.array_equal(p.H, 20.0 * np.eye(10))
    assert np.array_equal(p.c, np.zeros(10))
    assert np.linalg.matrix_rank(p.A) == 5
    assert p.provenance == {"generator": "random_qp", "seed": 1, "n": 10, "m": 5, "hessian_scale": 20.0}
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 10))
    assert np.array_equal(p.A, A)
    assert np.array_equal(p.b, rng.standard_normal(5))


@pytest.mark.parametrize("n,m,scale", [(3, 4, 1.0), (3, 0, 1.0), (3, 2, 0.0), (3, 2, -1.0)])
def test_random_qp_rejects_bad_arguments(n, m, scale):
    with pytest.raises(ValueError):
        make_random_qp(0, n, m, scale)


def test_least_squares_matches_its_draws():
    p = make_l2_least_squares(7, 30, 50, theta=1.0)
    rng = np.random.default_rng(7)
    C = rng.standard_normal((30, 50))
    d = rng.standard_normal(30)
    A = rng.standard_normal((30, 50))
    b = rng.standard_normal(30)
    assert np.allclose(p.H, 2 * C.T @ C + np.eye(50), rtol=0, atol=1e-12)
    assert np.allclose(p.c, -2 * C.T @ d, rtol=0, atol=1e-12)
    assert np.array_equal(p.A, A) and np.array_equal(p.b, b)
    # objective equals the least-squares cost minus the dropped constant
    x = rng.standard_normal(50)
    cost = np.sum((C @ x - d) ** 2) + 0.5 * np.sum(x ** 2) - d @ d
    assert p.objective(x) == pytest.approx(cost, rel=1e-12)


def test_least_squares_rejects_nonpositive_theta():
    with pytest.raises(ValueError):
        make_l2_least_squares(0, 2, 3, theta=0.0)


def test_json_round_trip_is_exact(tmp_path):
    p = make_l2_least_squares(2, 3, 5, theta=0.3)
    q = ConvexQuadraticProgram.from_dict(json.loads(json.dumps(p.to_dict())))
    for name in "HcAb":
        assert np.array_equal(getattr(p, name), getattr(q, name))
    assert q.provenance == p.provenance
    p.save(tmp_path / "p.json")
    r = ConvexQuadraticProgram.load(tmp_path / "p.json")
    assert np.array_equal(r.H, p.H)
    assert set(json.loads((tmp_path / "p.json").read_text())) == {"n", "m", "H", "c", "A", "b", "provenance"}


def test_declared_dims_are_checked():
    d = make_random_qp(1, 3, 2).to_dict()
    d["n"] = 4
    with pytest.raises(ValueError):
        ConvexQuadraticProgram.from_dict(d)


@pytest.mark.parametrize("kw", [
    dict(H=[[1.0, 2.0], [0.0, 1.0]], c=[0, 0], A=[[1, 0]], b=[0]),
    dict(H=[[1.0]], c=[0, 0], A=[[1]], b=[0]),
    dict(H=[[1.0]], c=[0], A=[[1, 1]], b=[0]),
    dict(H=[[1.0]], c=[0], A=np.zeros((0, 1)), b=[]),
])
def test_construction_rejects_malformed_programs(kw):
    with pytest.raises(ValueError):
        ConvexQuadraticProgram(**kw)


def test_arrays_are_read_only():
    p = make_random_qp(1, 3, 2)
    with pytest.raises(ValueError):
        p.A[0, 0] = 1.0


def test_validate_reports_each_assumption():
    good = make_random_qp(1, 4, 2)
    assert all_passed(validate(good))
    names = [ch.name for ch in validate(good)]
    assert names == ["strong_convexity", "full_row_rank", "constraint_spectrum"]

    singular = ConvexQuadraticProgram(H=np.diag([1.0, 0.0]), c=[0, 0], A=[[1, 0]], b=[1])
    checks = {ch.name: ch for ch in validate(singular)}
    assert not checks["strong_convexity"].passed and checks["full_row_rank"].passed

    rank_def = ConvexQuadraticProgram(H=np.eye(2), c=[0, 0], A=[[1, 1], [2, 2]], b=[1, 1])
    checks = {ch.name: ch for ch in validate(rank_def)}
    assert not checks["full_row_rank"].passed
    assert not all_passed(checks.values())


def test_primal_dual_point_round_trip():
    z = np.arange(5.0)
    pt = PrimalDualPoint.from_vector(z, 3)
    x, lam = pt
    assert np.array_equal(x, z[:3]) and np.array_equal(lam, z[3:])
    assert np.array_equal(pt.z, z)
    p = make_random_qp(1, 3, 2)
    assert np.array_equal(as_vector(p, pt), z)
    with pytest.raises(ValueError):
        as_vector(p, np.zeros(4))
