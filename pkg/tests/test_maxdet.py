import math

import numpy as np
import pytest

from fbcap.errors import Infeasible
from fbcap.maxdet import AffineBlock, MaxDetProblem, affine_block_from_fn


def test_affine_block_extraction():
    def fn(x):
        return np.array([[1.0 + 2.0 * x[0], x[1]], [x[1], 3.0 - x[0]]])

    blk = affine_block_from_fn(fn, 2)
    x = np.array([0.7, -1.3])
    assert np.allclose(blk.value(x), fn(x))
    assert blk.size == 2


def test_scalar_power_allocation():
    # maximize 0.5 log(1 + x) s.t. 0 <= x <= P -> x = P.
    P = 3.0
    obj = affine_block_from_fn(lambda x: np.array([[1.0 + x[0]]]), 1)
    c1 = affine_block_from_fn(lambda x: np.array([[P - x[0]]]), 1)
    c2 = affine_block_from_fn(lambda x: np.array([[x[0]]]), 1)
    prob = MaxDetProblem(dim=1, objective_blocks=[obj], constraint_blocks=[c1, c2])
    res = prob.solve(np.array([1.0]), gap_tol=1e-10)
    assert res.x[0] == pytest.approx(P, abs=1e-8)
    assert res.objective == pytest.approx(0.5 * math.log(1.0 + P), abs=1e-8)
    assert res.gap <= 1e-10


def test_two_band_water_filling():
    # maximize 0.5 log(1+x1) + 0.5 log(4+x2) s.t. x1+x2 <= P, x >= 0.
    # Lagrangian optimum: 1+x1 = 4+x2 when both active -> x1=3.5, x2=0.5 at P=4.
    P = 4.0
    o1 = affine_block_from_fn(lambda x: np.array([[1.0 + x[0]]]), 2)
    o2 = affine_block_from_fn(lambda x: np.array([[4.0 + x[1]]]), 2)
    cons = [
        affine_block_from_fn(lambda x: np.array([[P - x[0] - x[1]]]), 2),
        affine_block_from_fn(lambda x: np.array([[x[0]]]), 2),
        affine_block_from_fn(lambda x: np.array([[x[1]]]), 2),
    ]
    prob = MaxDetProblem(dim=2, objective_blocks=[o1, o2], constraint_blocks=cons)
    res = prob.solve(np.array([1.0, 1.0]), gap_tol=1e-10)
    assert res.x[0] == pytest.approx(3.5, abs=1e-7)
    assert res.x[1] == pytest.approx(0.5, abs=1e-7)


def test_matrix_block_optimum():
    # maximize 0.5 logdet diag(x1, x2) s.t. x1 + x2 <= 2, x >= 0 -> (1, 1).
    obj = affine_block_from_fn(
        lambda x: np.array([[x[0], 0.0], [0.0, x[1]]]), 2
    )
    cons = [
        affine_block_from_fn(lambda x: np.array([[2.0 - x[0] - x[1]]]), 2),
        affine_block_from_fn(lambda x: np.array([[x[0]]]), 2),
        affine_block_from_fn(lambda x: np.array([[x[1]]]), 2),
    ]
    prob = MaxDetProblem(dim=2, objective_blocks=[obj], constraint_blocks=cons)
    res = prob.solve(np.array([0.5, 0.2]), gap_tol=1e-10)
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-7)


def test_infeasible_start_raises():
    obj = affine_block_from_fn(lambda x: np.array([[1.0 + x[0]]]), 1)
    c = affine_block_from_fn(lambda x: np.array([[-1.0 - x[0] * 0.0]]), 1)
    prob = MaxDetProblem(dim=1, objective_blocks=[obj], constraint_blocks=[c])
    with pytest.raises(Infeasible):
        prob.solve(np.array([0.0]))


def test_perturbation_shifts_constants():
    c = AffineBlock(const=np.zeros((2, 2)), coeffs=np.zeros((1, 2, 2)))
    obj = affine_block_from_fn(lambda x: np.array([[1.0 + x[0]]]), 1)
    prob = MaxDetProblem(
        dim=1, objective_blocks=[obj], constraint_blocks=[c], perturbation=1e-6
    )
    assert np.allclose(c.const, 1e-6 * np.eye(2))
    assert prob.is_strictly_feasible(np.array([0.0]))


def test_gap_certificate():
    obj = affine_block_from_fn(lambda x: np.array([[1.0 + x[0]]]), 1)
    cons = [
        affine_block_from_fn(lambda x: np.array([[2.0 - x[0]]]), 1),
        affine_block_from_fn(lambda x: np.array([[x[0]]]), 1),
    ]
    prob = MaxDetProblem(dim=1, objective_blocks=[obj], constraint_blocks=cons)
    res = prob.solve(np.array([1.0]), gap_tol=1e-6)
    # the reported duality gap bounds the true suboptimality
    assert 0.5 * math.log(3.0) - res.objective <= res.gap + 1e-12
