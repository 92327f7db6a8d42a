import numpy as np
import pytest

from simrsma.barrier import BarrierError, LogAffineSystem, barrier_solve


def _system(lin, const, terms=()):
    lin = np.asarray(lin, dtype=float)
    n = lin.shape[1]
    fn = np.array([t[0] for t in terms], dtype=int)
    a = np.array([t[1] for t in terms], dtype=float).reshape(-1, n)
    b = np.array([t[2] for t in terms], dtype=float)
    w = np.array([t[3] for t in terms], dtype=float)
    return LogAffineSystem(lin, np.asarray(const, dtype=float), fn, a, b, w)


def test_linear_program():
    # max x + y  s.t. x >= 0, y >= 0, 1 - x - 2y >= 0  ->  (1, 0)
    sys_ = _system([[1, 1], [1, 0], [0, 1], [-1, -2]], [0, 0, 0, 1])
    res = barrier_solve(sys_, [0.1, 0.1])
    assert res.z == pytest.approx([1, 0], abs=1e-7)
    assert res.gap < 1e-9 and not res.phase1


def test_log_objective_water_filling():
    # max ln(1 + 4x) + ln(1 + y)  s.t. x, y >= 0, x + y <= 1
    # KKT: 4/(1+4x) = 1/(1+y), x + y = 1  ->  x = 0.875
    sys_ = _system([[0, 0], [1, 0], [0, 1], [-1, -1]], [0, 0, 0, 1],
                   [(0, [4, 0], 1, 1), (0, [0, 1], 1, 1)])
    res = barrier_solve(sys_, [0.2, 0.2])
    assert res.z == pytest.approx([0.875, 0.125], abs=1e-6)


def test_phase_one_from_infeasible_start():
    # same LP, start violates the budget
    sys_ = _system([[1, 1], [1, 0], [0, 1], [-1, -2]], [0, 0, 0, 1])
    res = barrier_solve(sys_, [2.0, 2.0])
    assert res.phase1
    assert res.z == pytest.approx([1, 0], abs=1e-6)


def test_infeasible_problem_raises():
    # x >= 1 and x <= 0
    sys_ = _system([[1], [1], [-1]], [0, -1, 0])
    with pytest.raises(BarrierError):
        barrier_solve(sys_, [0.5])


def test_domain_violation_raises():
    sys_ = _system([[0], [1]], [0, 0], [(0, [1], -1, 1)])
    with pytest.raises(BarrierError):
        barrier_solve(sys_, [0.5])
