import numpy as np
import pytest

from dht.channel import Dmc
from dht.errors import InvalidDistribution, ZeroZMass
from dht.infomath import (
    Alphabet,
    CondPmf,
    JointPmf,
    conditional_entropy,
    conditional_mutual_information,
)
from dht.singleletter import (
    AuxChannel,
    SolverOpts,
    TaciInstance,
    build_taci_q,
    bt_inner_bound,
    bt_outer_bound,
    mix_to_constraint,
    sweep_tau,
    theta_single_helper,
)
from helpers import (
    BSC01_CAPACITY,
    dsbs_pair_instance,
    gerber_exponent,
    random_l1_instance,
    random_l2_instance,
)

FAST = SolverOpts(restarts=16, max_iters=200, stall_patience=15)


# --- alternative-hypothesis construction ------------------------------------


def test_q_is_fixed_point_for_conditionally_independent_source():
    rng = np.random.default_rng(0)
    pu = rng.dirichlet(np.ones(2), size=2)  # P(u|z)
    pv = rng.dirichlet(np.ones(3), size=2)  # P(v|z)
    pz = np.array([0.4, 0.6])
    probs = np.einsum("z,zu,zv->uvz", pz, pu, pv)
    joint = JointPmf((Alphabet("u1", 2), Alphabet("v", 3), Alphabet("z", 2)), probs)
    q = build_taci_q(joint)
    assert np.allclose(q.probs, joint.probs, atol=1e-14)


def test_q_for_dsbs_is_uniform_product(dsbs_bsc):
    inst = dsbs_bsc()
    assert np.allclose(inst.q_joint.probs, 0.25)


def test_q_marginals_match_p():
    rng = np.random.default_rng(3)
    inst = random_l1_instance(rng)
    for name in inst.p_joint.names:
        assert np.allclose(
            inst.q_joint.marginal([name]).probs, inst.p_joint.marginal([name]).probs, atol=1e-12
        )


def test_zero_side_information_mass_raises():
    probs = np.zeros((2, 2, 2))
    probs[:, :, 0] = 0.25
    joint = JointPmf((Alphabet("u1", 2), Alphabet("v", 2), Alphabet("z", 2)), probs)
    with pytest.raises(ZeroZMass):
        build_taci_q(joint)


def test_zero_alternative_cells_warn_and_instance_rejects():
    from dht.errors import QNotPositiveWarning

    probs = np.zeros((2, 2, 2))
    probs[0, :, 0] = 0.2  # u=1 never occurs alongside z=0
    probs[:, :, 1] = 0.15
    joint = JointPmf((Alphabet("u1", 2), Alphabet("v", 2), Alphabet("z", 2)), probs)
    with pytest.warns(QNotPositiveWarning):
        q = build_taci_q(joint)
    assert np.any(q.probs == 0)
    with pytest.warns(QNotPositiveWarning):
        with pytest.raises(InvalidDistribution):
            TaciInstance(joint, (Dmc.bsc(0.1),), 1.0)


# --- one-helper exponent -----------------------------------------------------


def test_theta_zero_bandwidth(dsbs_bsc):
    res = theta_single_helper(dsbs_bsc(0.0), FAST)
    assert res.value == 0.0
    law = res.achiever[0].law.matrix
    assert np.allclose(law, law[0])  # W independent of U


def test_theta_matches_gerber_oracle(dsbs_bsc):
    for tau in (0.5, 1.0, 2.0):
        want = gerber_exponent(0.1, BSC01_CAPACITY, tau)
        res = theta_single_helper(dsbs_bsc(tau), SolverOpts(restarts=32))
        assert abs(res.value - want) < 2e-3
        assert res.grid_value is not None
        assert res.value >= res.grid_value - 1e-4


def test_theta_saturates_at_ample_bandwidth(dsbs_bsc):
    inst = dsbs_bsc(2.0)  # tau*C = 1.062 >= H(U) = 1
    res = theta_single_helper(inst, FAST)
    i_uv = conditional_mutual_information(inst.p_joint, ["u1"], ["v"], ["z"])
    assert abs(res.value - i_uv) < 1e-9


def test_theta_achiever_is_feasible_and_stochastic():
    rng = np.random.default_rng(17)
    for _ in range(5):
        inst = random_l1_instance(rng, tau=float(rng.uniform(0.2, 2.0)))
        res = theta_single_helper(inst, FAST)
        aux = res.achiever[0]
        law = aux.law.matrix
        assert np.all(law >= 0) and np.allclose(law.sum(axis=1), 1.0, atol=1e-12)
        joint = inst.p_joint.extend(aux.law)
        i_uw = conditional_mutual_information(joint, ["u1"], ["w1"], ["z"])
        assert i_uw <= inst.budget(0) + 1e-9
        assert res.constraint_slack[(1,)] >= -1e-9
        i_uv = conditional_mutual_information(inst.p_joint, ["u1"], ["v"], ["z"])
        assert -1e-12 <= res.value <= min(inst.budget(0), i_uv) + 1e-9
        assert aux.w_size <= inst.p_joint.axes[0].size + 4


# --- constant-symbol mixing --------------------------------------------------


def _cmi_of_aux(inst, aux, other="v"):
    joint = inst.p_joint.extend(aux.law)
    name = aux.law.output_axes[0].name
    return (
        conditional_mutual_information(joint, ["u1"], [name], ["z"]),
        conditional_mutual_information(joint, [other], [name], ["z"]),
    )


def test_mix_noop_when_already_feasible(dsbs_bsc):
    inst = dsbs_bsc()
    law = CondPmf((inst.p_joint.axes[0],), (Alphabet("w1", 2),), np.eye(2))
    aux = AuxChannel(0, law)
    i_uw, _ = _cmi_of_aux(inst, aux)
    assert mix_to_constraint(aux, i_uw, i_uw + 0.1) is aux


def test_mix_constant_channel_untouched(dsbs_bsc):
    inst = dsbs_bsc()
    law = CondPmf((inst.p_joint.axes[0],), (Alphabet("w1", 2),), np.array([[1.0, 0.0], [1.0, 0.0]]))
    aux = AuxChannel(0, law)
    assert mix_to_constraint(aux, 0.0, 0.3) is aux


def test_mix_halves_information_at_half_budget(dsbs_bsc):
    inst = dsbs_bsc()
    law = CondPmf((inst.p_joint.axes[0],), (Alphabet("w1", 2),), np.eye(2))
    aux = AuxChannel(0, law)
    i_uw, i_vw = _cmi_of_aux(inst, aux)
    mixed = mix_to_constraint(aux, i_uw, i_uw / 2)
    assert mixed.law.matrix[0, -1] == pytest.approx(0.5)  # p = 1 - budget/I
    i_uw2, i_vw2 = _cmi_of_aux(inst, mixed)
    assert abs(i_uw2 - i_uw / 2) < 1e-10
    assert abs(i_vw2 - 0.5 * i_vw) < 1e-10


def test_mix_hits_budget_exactly_on_random_instances():
    rng = np.random.default_rng(23)
    for _ in range(10):
        inst = random_l1_instance(rng)
        nu = inst.p_joint.axes[0].size
        rows = rng.gamma(1.0, size=(nu, nu + 1)) + 1e-3
        rows /= rows.sum(axis=1, keepdims=True)
        aux = AuxChannel(0, CondPmf((inst.p_joint.axes[0],), (Alphabet("w1", nu + 1),), rows))
        i_uw, i_vw = _cmi_of_aux(inst, aux)
        if i_uw < 1e-6:
            continue
        budget = i_uw * float(rng.uniform(0.2, 0.9))
        mixed = mix_to_constraint(aux, i_uw, budget)
        i_uw2, i_vw2 = _cmi_of_aux(inst, mixed)
        p = mixed.law.matrix[0, -1]
        assert abs(i_uw2 - budget) < 1e-10
        assert abs(i_vw2 - (1 - p) * i_vw) < 1e-10


# --- sweeps ------------------------------------------------------------------


def test_sweep_dsbs_matches_oracle_curve(dsbs_bsc):
    rows = sweep_tau(dsbs_bsc(1.0), [0.5, 1.0, 2.0], SolverOpts(restarts=32))
    wants = [gerber_exponent(0.1, BSC01_CAPACITY, t) for t in (0.5, 1.0, 2.0)]
    for row, want in zip(rows, wants):
        assert abs(row.value - want) < 2e-3
        assert row.lower_bound == row.value == row.upper_bound


def test_sweep_zero_prefix_and_monotone(dsbs_bsc):
    rows = sweep_tau(dsbs_bsc(1.0), [0.0, 0.4, 0.9, 1.7], FAST)
    assert rows[0].value == 0.0
    vals = [r.value for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_sweep_rejects_bad_grid(dsbs_bsc):
    with pytest.raises(InvalidDistribution):
        sweep_tau(dsbs_bsc(1.0), [0.5, 0.5], FAST)
    with pytest.raises(InvalidDistribution):
        sweep_tau(dsbs_bsc(1.0), [-0.1, 0.5], FAST)


# --- Berger-Tung bounds ------------------------------------------------------


def test_inner_bound_single_helper_reduces_to_direct_solve(dsbs_bsc):
    inst = dsbs_bsc(1.0)
    theta = theta_single_helper(inst, FAST)
    inner = bt_inner_bound(inst, FAST)
    assert inner.value == pytest.approx(theta.value, abs=1e-12)
    assert inner.rate_bound == pytest.approx(inst.h_v_given_z - theta.value, abs=1e-12)


def test_outer_equals_inner_for_single_helper(dsbs_bsc):
    inst = dsbs_bsc(0.8)
    inner = bt_inner_bound(inst, FAST)
    outer = bt_outer_bound(inst, FAST)
    assert abs(outer.value - inner.value) < 1e-6
    assert abs(outer.rate_bound - inner.rate_bound) < 1e-6


def test_zero_capacity_channels_give_zero_exponent():
    inst = dsbs_pair_instance(0.1, 0.2, Dmc.bsc(0.5), Dmc.bsc(0.5), 1.0)
    opts = SolverOpts(restarts_bt=4, max_iters=80)
    inner = bt_inner_bound(inst, opts)
    assert abs(inner.rate_bound - inst.h_v_given_z) < 1e-9
    assert inner.value <= 1e-9
    outer = bt_outer_bound(inst, opts)
    assert outer.value <= 1e-9


def test_two_helper_exponent_additive_for_independent_pairs():
    inst = dsbs_pair_instance(0.1, 0.1, Dmc.bsc(0.1), Dmc.bsc(0.1), 1.0)
    want = 2 * gerber_exponent(0.1, BSC01_CAPACITY, 1.0)
    inner = bt_inner_bound(inst, SolverOpts(restarts_bt=6, max_iters=250))
    assert abs(inner.value - want) < 2e-3


def test_two_helper_bounds_ordered_on_random_instances():
    rng = np.random.default_rng(31)
    opts = SolverOpts(restarts_bt=4, max_iters=120)
    for _ in range(2):
        inst = random_l2_instance(rng, tau=float(rng.uniform(0.3, 1.5)))
        inner = bt_inner_bound(inst, opts)
        outer = bt_outer_bound(inst, opts)
        assert outer.rate_bound <= inner.rate_bound + 1e-6
        assert inst.h_v_given_z - inner.rate_bound <= inst.h_v_given_z - outer.rate_bound + 1e-6
        assert outer.status == "Experimental"
        for subset, slack in inner.constraint_slack.items():
            assert slack >= -1e-9, subset


# --- instance invariants -------------------------------------------------------


def test_instance_requires_canonical_axis_order():
    probs = np.full((2, 2, 1), 0.25)
    axes = (Alphabet("v", 2), Alphabet("u1", 2), Alphabet("z", 1))
    with pytest.raises(Exception):
        TaciInstance(JointPmf(axes, probs), (Dmc.bsc(0.1),), 1.0)


def test_instance_with_tau_keeps_capacities(dsbs_bsc):
    inst = dsbs_bsc(1.0)
    caps = inst.capacities
    inst2 = inst.with_tau(2.0)
    assert inst2.capacities is caps
    assert conditional_entropy(inst2.p_joint, ["v"], ["z"]) == pytest.approx(1.0)
