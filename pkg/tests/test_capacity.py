import math

import numpy as np
import pytest

import fbcap as fb
from fbcap.errors import NotScalar, OutOfRange


def test_ma_oracles_agree(ma05_solution):
    fp = fb.ma_capacity_fixed_point(0.5, 1.0)
    root = fb.kim_ma_capacity(0.5, 1.0)
    assert fp == pytest.approx(root, abs=1e-9)
    assert ma05_solution.capacity_nats == pytest.approx(fp, abs=1e-4)


def test_ma_fixed_point_second_branch():
    # |alpha| > 1: the solver must match the second branch of the fixed point.
    ch = fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ma1(2.0))
    sol = fb.solve_capacity_scalar(ch)
    assert sol.capacity_nats == pytest.approx(
        fb.ma_capacity_fixed_point(2.0, 1.0), abs=1e-4
    )


def test_kim_root_domain():
    with pytest.raises(OutOfRange):
        fb.kim_ma_capacity(1.5, 1.0)


def test_capacity_sign_symmetry():
    a = fb.solve_capacity_scalar(
        fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ma1(0.6))
    )
    b = fb.solve_capacity_scalar(
        fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ma1(-0.6))
    )
    assert a.capacity_nats == pytest.approx(b.capacity_nats, abs=1e-6)


def test_scalar_and_general_formulations_agree(ma05_channel, ma05_solution):
    general = fb.solve_capacity(ma05_channel)
    assert general.capacity_nats == pytest.approx(
        ma05_solution.capacity_nats, abs=1e-6
    )


def test_lambda_folded_into_power():
    # Scaling Lambda by c and P by 1/c^2 leaves the capacity unchanged.
    noise = fb.build_ma1(0.5)
    base = fb.solve_capacity_scalar(
        fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=noise)
    )
    scaled = fb.solve_capacity_scalar(
        fb.ChannelModel(Lambda=[[2.0]], P=0.25, noise=noise)
    )
    assert scaled.capacity_nats == pytest.approx(base.capacity_nats, abs=1e-8)


def test_capacity_monotone_in_power():
    noise = fb.build_ma1(0.5)
    caps = [
        fb.solve_capacity_scalar(
            fb.ChannelModel(Lambda=[[1.0]], P=p, noise=noise)
        ).capacity_nats
        for p in (0.5, 1.0, 2.0)
    ]
    assert caps[0] < caps[1] < caps[2]


def test_solve_capacity_scalar_rejects_mimo(mimo_instance):
    with pytest.raises(NotScalar):
        fb.solve_capacity_scalar(mimo_instance)


def test_ar_iid_rate_closed_form():
    assert fb.ar_iid_rate(0.0) == pytest.approx(0.5 * math.log(2.0))
    # beta -> 0 limit is continuous
    assert fb.ar_iid_rate(1e-7) == pytest.approx(0.5 * math.log(2.0), abs=1e-6)
    ch = fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ar1(0.6))
    sol = fb.solve_capacity_scalar(ch, fb.SolverOptions(constrain_gamma_zero=True))
    assert sol.capacity_nats == pytest.approx(fb.ar_iid_rate(0.6), abs=1e-5)
    assert np.max(np.abs(sol.Gamma)) == 0.0


def test_ar_stationary_matches_capacity_in_stationary_regime():
    for beta in (0.3, 0.8):
        ch = fb.ChannelModel(Lambda=[[1.0]], P=1.0, noise=fb.build_ar1(beta))
        sol = fb.solve_capacity_scalar(ch)
        assert fb.ar_stationary_capacity(beta) == pytest.approx(
            sol.capacity_nats, abs=1e-6
        )


def test_policy_extraction(ma05_solution, ma05_policy):
    # Gamma lies in the row space of SigmaHat and A reproduces it.
    res = ma05_policy.A @ ma05_solution.SigmaHat - ma05_solution.Gamma
    assert np.max(np.abs(res)) < 1e-8
    assert np.min(np.linalg.eigvalsh(ma05_policy.M)) >= 0.0
    # MA noise: all power goes to the feedback component.
    assert np.max(np.abs(ma05_policy.M)) < 1e-6


def test_certificates(ma05_solution):
    sol = ma05_solution
    assert min(sol.lmi_margins) >= -1e-8
    assert float(np.trace(sol.Pi)) <= 1.0 + 1e-8
    assert sol.orthogonality_residual <= 1e-8
    assert sol.schur_residual <= 1e-7
    assert abs(sol.objective_shift) <= 1e-7
    assert sol.kkt_residual <= 1e-9


def test_mimo_solution_certificates(mimo_instance):
    sol = fb.solve_capacity(mimo_instance)
    assert sol.capacity_nats > 0.0
    assert min(sol.lmi_margins) >= -1e-8
    assert float(np.trace(sol.Pi)) <= mimo_instance.P + 1e-8
    assert sol.schur_residual <= 1e-7


def test_waterfilling_white_noise():
    white = fb.StateSpaceNoise(
        F=[[0.0]], G=[[1.0]], H=[[0.0]], W=[[1.0]], V=[[1.0]], L=[[0.0]],
        Sigma1=[[1.0]],
    )
    ch = fb.ChannelModel(Lambda=[[1.0]], P=3.0, noise=white)
    assert fb.waterfilling_capacity(ch) == pytest.approx(
        0.5 * math.log(4.0), abs=1e-10
    )


def test_waterfilling_bounded_by_feedback(ma05_channel, ma05_solution):
    wf = fb.waterfilling_capacity(ma05_channel)
    assert wf <= ma05_solution.capacity_nats + 1e-6


def test_scop_values_increase_to_capacity(ma05_channel, ma05_solution):
    values = [fb.scop_finite_n(ma05_channel, n) for n in (1, 2, 4)]
    assert values[0] < values[1] < values[2]
    assert values[-1] < ma05_solution.capacity_nats + 1e-6
    # n = 1 has a closed form: 0.5 log(1 + P / Psi_1), Psi_1 = H S1 H + V.
    psi1 = 0.25 * 1.0 + 1.0
    assert values[0] == pytest.approx(0.5 * math.log(1.0 + 1.0 / psi1), abs=2e-5)


def test_closed_loop_check(ma05_channel, ma05_solution, ma05_policy):
    rep = fb.closed_loop_check(ma05_channel, ma05_policy, 400, ma05_solution)
    assert rep.detectable
    assert rep.sigma_gap < 1e-8
    assert rep.psi_gap < 1e-8


def test_awgn_closed_form():
    white = fb.StateSpaceNoise(
        F=[[0.0]], G=[[1.0]], H=[[0.0]], W=[[1.0]], V=[[1.0]], L=[[0.0]],
        Sigma1=[[1.0]],
    )
    for P in (0.5, 1.0, 2.0):
        ch = fb.ChannelModel(Lambda=[[1.0]], P=P, noise=white)
        sol = fb.solve_capacity(ch)
        assert sol.capacity_nats == pytest.approx(0.5 * math.log1p(P), abs=1e-6)
