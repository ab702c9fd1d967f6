import numpy as np
import pytest

from dht.channel import Dmc
from dht.errors import BlocklengthViolation, BudgetExceeded, HelpersExceeded
from dht.infomath import conditional_entropy, conditional_mutual_information
from dht.multiletter import (
    EncoderSpec,
    OracleOpts,
    divergence_for_encoder,
    theta_multiletter,
    verify_compinf_identity,
)
from dht.singleletter import SolverOpts, TaciInstance, theta_single_helper
from helpers import BSC01_CAPACITY, gerber_exponent, random_binary_instance, random_l1_instance

OPTS = OracleOpts()


def random_encoder(rng, u_size, x_size, k, n):
    rows = rng.gamma(1.0, size=(u_size**k, max(x_size**n, 1))) + 1e-3
    rows /= rows.sum(axis=1, keepdims=True)
    return EncoderSpec.from_matrix(k, n, rows, u_size, x_size)


def test_useless_channel_gives_zero_for_every_encoder(dsbs_bsc):
    inst = TaciInstance.dsbs(0.1, Dmc.bsc(0.5), 1.0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        enc = random_encoder(rng, 2, 2, 1, 1)
        assert abs(divergence_for_encoder(inst, enc)) < 1e-12


def test_identity_encoder_over_clean_channel_gives_mutual_information():
    rng = np.random.default_rng(1)
    inst = random_l1_instance(rng, tau=1.0)
    nu = inst.p_joint.axes[0].size
    clean = Dmc.from_matrix(np.eye(nu))
    inst = TaciInstance(inst.p_joint, (clean,), 1.0)
    enc = EncoderSpec.identity_like(1, 1, nu, nu)
    want = conditional_mutual_information(inst.p_joint, ["u1"], ["v"], ["z"])
    assert abs(divergence_for_encoder(inst, enc) - want) < 1e-12


def test_dsbs_identity_encoder_value(dsbs_bsc):
    # V -> Y is a binary symmetric channel with crossover 0.1*0.9 + 0.9*0.1
    enc = EncoderSpec.identity_like(1, 1, 2, 2)
    got = divergence_for_encoder(dsbs_bsc(1.0), enc)
    assert abs(got - 0.31992295427172024) < 1e-12


def test_blocklength_violation(dsbs_bsc):
    enc = EncoderSpec.identity_like(2, 2, 2, 2)  # n=2 > tau*k=1
    with pytest.raises(BlocklengthViolation):
        divergence_for_encoder(dsbs_bsc(0.5), enc)


def test_budget_exceeded(dsbs_bsc):
    enc = EncoderSpec.identity_like(1, 1, 2, 2)
    with pytest.raises(BudgetExceeded):
        divergence_for_encoder(dsbs_bsc(1.0), enc, budget=2)


def test_compinf_identity_trivial_cases(dsbs_bsc):
    useless = TaciInstance.dsbs(0.1, Dmc.bsc(0.5), 1.0)
    enc = EncoderSpec.identity_like(1, 1, 2, 2)
    theta_term, r_term, residual = verify_compinf_identity(useless, enc)
    assert abs(theta_term) < 1e-12
    assert abs(r_term - useless.h_v_given_z) < 1e-12
    assert residual < 1e-9

    clean = TaciInstance.dsbs(0.1, Dmc.from_matrix(np.eye(2)), 1.0)
    theta_term, r_term, residual = verify_compinf_identity(clean, enc)
    assert abs(theta_term - conditional_mutual_information(clean.p_joint, ["u1"], ["v"], ["z"])) < 1e-12
    assert abs(r_term - conditional_entropy(clean.p_joint, ["v"], ["u1", "z"])) < 1e-12
    assert residual < 1e-9


def test_compinf_identity_random_encoders():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(25):
        k = int(rng.integers(1, 3))
        inst = random_l1_instance(rng, tau=float(rng.uniform(0.4, 1.6)))
        n = int(np.floor(inst.tau * k + 1e-12))
        enc = random_encoder(rng, inst.p_joint.axes[0].size, inst.channels[0].input.size, k, n)
        _, _, residual = verify_compinf_identity(inst, enc)
        worst = max(worst, residual)
    assert worst <= 1e-9


def test_oracle_zero_bandwidth(dsbs_bsc):
    res = theta_multiletter(dsbs_bsc(0.0), 1, OPTS)
    assert res.theta_k_tau == pytest.approx(0.0, abs=1e-12)
    assert res.r_k == pytest.approx(1.0, abs=1e-12)


def test_oracle_dsbs_k1_finds_bijection(dsbs_bsc):
    res = theta_multiletter(dsbs_bsc(1.0), 1, OPTS)
    assert abs(res.theta_k_tau - 0.31992295427172024) < 1e-9
    law = res.best_encoder[0].matrix
    assert np.allclose(np.sort(law, axis=1), [[0, 1], [0, 1]])  # deterministic
    assert np.allclose(law @ law.T, np.eye(2))  # and a bijection
    assert res.theta_k_tau + res.r_k == pytest.approx(1.0, abs=1e-9)


def test_oracle_clean_channel_residual_rate(dsbs_bsc):
    inst = TaciInstance.dsbs(0.1, Dmc.from_matrix(np.eye(2)), 1.0)
    res = theta_multiletter(inst, 1, OPTS)
    want = conditional_entropy(inst.p_joint, ["v"], ["u1", "z"])
    assert abs(res.r_k - want) < 1e-9


def test_oracle_monotone_in_bandwidth(dsbs_bsc):
    vals = [theta_multiletter(dsbs_bsc(t), 1, OPTS).theta_k_tau for t in (0.5, 1.0, 2.0)]
    assert vals[0] == 0.0  # n = floor(0.5) = 0
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_block_two_at_least_block_one_when_uses_double():
    rng = np.random.default_rng(11)
    for _ in range(4):
        inst = random_binary_instance(rng, tau=1.0)
        t1 = theta_multiletter(inst, 1, OPTS).theta_k_tau
        t2 = theta_multiletter(inst, 2, OPTS).theta_k_tau
        assert t2 >= t1 - 1e-9


def test_block_oracle_below_single_letter(dsbs_bsc):
    single = theta_single_helper(dsbs_bsc(1.0), SolverOpts(restarts=24)).value
    for k in (1, 2):
        blk = theta_multiletter(dsbs_bsc(1.0), k, OPTS).theta_k_tau
        assert blk <= single + 2e-3


def test_oracle_helper_budget_flag():
    rng = np.random.default_rng(13)
    from helpers import random_l2_instance

    inst = random_l2_instance(rng, tau=1.0)
    with pytest.raises(HelpersExceeded):
        theta_multiletter(inst, 1, OracleOpts(max_helpers=1))
    res = theta_multiletter(inst, 1, OracleOpts(max_helpers=2))
    assert res.theta_k_tau + res.r_k == pytest.approx(inst.h_v_given_z, abs=1e-9)
