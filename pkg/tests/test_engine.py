import math

import numpy as np
import pytest

from swapreg import engine
from swapreg.adversary import IidVertexAdversary, ReplayAdversary
from swapreg.errors import AdversaryFault, PremiseViolated
from swapreg.evaluate import PlayHistory, linear_swap_regret
from swapreg.sets import Ball, LinearImage

RNG = np.random.default_rng(17)


def test_first_round_any_play_is_minimax():
    pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
    state = engine.ApproachState(2)
    log = engine.step(state, pset, lset, lambda t, p: np.array([0.5, -0.5]))
    assert log.t == 1
    assert log.invariant_value == 0.0
    assert log.game_value == 0.0


def test_d1_constant_loss_recursion():
    # P = [-1,1], L = [-1,1], constant loss 1: b(l*) = -1, plays lock at -1
    # and kappa_bar equals s_bar so U stays identically zero.
    adv = ReplayAdversary(np.ones((30, 1)))
    traj = engine.run(Ball(math.inf, 1), Ball(1.0, 1), 30, adv, solver="exact")
    assert np.all(traj.plays[1:] == -1.0)
    assert np.linalg.norm(traj.state.U) == pytest.approx(0.0, abs=1e-12)
    assert traj.certificate == pytest.approx(0.0, abs=1e-12)


def test_invariant_every_round_random_adversary():
    pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
    traj = engine.run(pset, lset, 100, IidVertexAdversary(lset, 5), solver="exact")
    assert all(r.invariant_value <= 1e-7 for r in traj.rounds)


def test_adversary_fault_detected():
    pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
    with pytest.raises(AdversaryFault):
        engine.run(pset, lset, 3, lambda t, p: np.array([2.0, 0.0]))


def test_certificate_chain_exact_mode():
    pset, lset = Ball(math.inf, 3), Ball(1.0, 3)
    traj = engine.run(pset, lset, 400, IidVertexAdversary(lset, 0), solver="exact", seed=4)
    T = traj.T
    assert traj.certificate <= 2 * traj.norm_bound / math.sqrt(T) + 1e-9
    # single-step certificate <= 2B
    traj1 = engine.run(pset, lset, 1, IidVertexAdversary(lset, 0), solver="exact")
    assert traj1.certificate <= 2 * traj1.norm_bound


def test_state_consistency_and_norm_bound():
    pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
    traj = engine.run(pset, lset, 60, IidVertexAdversary(lset, 9), solver="exact")
    assert traj.state.consistency_error() <= 1e-8
    # B = max round norm: for Binf(2)/B1(2) it is at most sqrt(d+1)
    assert traj.norm_bound <= math.sqrt(3) + 1e-9


def test_fpl_mode_certificate():
    pset, lset = Ball(math.inf, 3), Ball(1.0, 3)
    traj = engine.run(pset, lset, 150, IidVertexAdversary(lset, 2), solver="fpl",
                      fpl_iters=2000, seed=8)
    assert traj.mode == "normalized"
    assert traj.certificate <= traj.certificate_bound + 1e-6
    # normalized-mode invariants: raw inner product <= (t-1) eps_t
    for r in traj.rounds:
        assert r.invariant_value <= (r.t - 1) * r.eps + 1e-7


def test_preconditioned_identity_on_cube():
    pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
    t1 = engine.run(pset, lset, 40, IidVertexAdversary(lset, 3), solver="exact", seed=6)
    t2 = engine.run_preconditioned(pset, lset, 40, IidVertexAdversary(lset, 3),
                                   solver="exact", seed=6)
    assert np.allclose(t1.plays, t2.plays_original)
    assert np.allclose(t1.losses, t2.losses_original)


def test_preconditioned_cross_polytope_norms():
    d = 3
    pset, lset = Ball(1.0, d), Ball(math.inf, d)
    traj = engine.run_preconditioned(pset, lset, 50, IidVertexAdversary(lset, 1),
                                     solver="exact", seed=2)
    # transformed-space round norms obey the sqrt(d+1) bound
    assert traj.norm_bound <= math.sqrt(d + 1) + 1e-6
    # instantaneous losses agree between frames
    for t in range(traj.T):
        inner_orig = float(traj.plays_original[t] @ traj.losses_original[t])
        inner_prime = float(traj.plays[t] @ traj.losses[t])
        assert inner_orig == pytest.approx(inner_prime, abs=1e-9)


def test_preconditioned_regret_equal_in_both_frames():
    d = 2
    pset, lset = Ball(1.0, d), Ball(math.inf, d)
    traj = engine.run_preconditioned(pset, lset, 60, IidVertexAdversary(lset, 12),
                                     solver="exact", seed=3)
    hist_orig = PlayHistory(pset, lset, traj.plays_original, traj.losses_original)
    v_orig, _ = linear_swap_regret(hist_orig, validate=False)
    pre = traj.preconditioner
    hist_prime = PlayHistory(pre.target, LinearImage(pre.inverse_transpose, lset),
                             traj.plays, traj.losses)
    v_prime, _ = linear_swap_regret(hist_prime, validate=False)
    assert v_prime == pytest.approx(v_orig, abs=1e-6 * (1 + abs(v_orig)))


def test_preconditioned_simplex_weak_norm_bound():
    # Non-symmetric route: corner simplex via the analytic regular-simplex
    # transform.  With losses drawn from the polar of the positioned simplex,
    # the matrix block obeys ||l (x) p||_F <= d.
    d = 3
    from swapreg.john import john_precondition
    from swapreg.sets import LinearImage as LI
    pset = __import__("swapreg.sets", fromlist=["Simplex"]).Simplex(d)
    pre, _ = john_precondition(pset)
    primed_polar = pre.target.polar()
    lset = LI(pre.forward.T, primed_polar)  # maps to exactly the primed polar
    adv = IidVertexAdversary(lset, 4)
    traj = engine.run_preconditioned(pset, lset, 40, adv, solver="exact", seed=4)
    # primed-frame pairing normalized to 1, plays live in the regular simplex
    for t in range(traj.T):
        mat_norm = np.linalg.norm(np.outer(traj.losses[t], traj.plays[t]))
        assert mat_norm <= d + 1e-6
        assert pre.target.contains(traj.plays[t], 1e-7)
        assert pset.contains(traj.plays_original[t], 1e-7)
    assert traj.certificate <= 2 * traj.norm_bound / math.sqrt(traj.T) + 1e-9


def test_pythagorean_trivial_cases():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    holds, lhs, rhs = engine.pythagorean_check([e1, -e1, e1, -e1], 1.0)
    assert holds and lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(2.0)
    holds, lhs, rhs = engine.pythagorean_check([e1, e2], 1.0)
    assert holds
    assert lhs == pytest.approx(math.sqrt(2), abs=1e-12)
    assert rhs == pytest.approx(math.sqrt(2), abs=1e-12)  # tight case


def test_pythagorean_with_injected_eps():
    rng = np.random.default_rng(0)
    for _ in range(20):
        T, k = 30, 3
        vs = []
        eps = np.zeros(T)
        run = np.zeros(k)
        for t in range(1, T + 1):
            v = rng.normal(size=k)
            v /= max(np.linalg.norm(v), 1.0)
            if t >= 2:
                ip = float(run @ v) / (t - 1)
                eps[t - 1] = max(ip, 0.0) + 0.1  # premise holds with slack
            vs.append(v)
            run += v
        holds, lhs, rhs = engine.pythagorean_check(np.array(vs), 1.0, eps)
        assert holds


def test_pythagorean_premise_violation_reported():
    vs = np.array([[1.0, 0.0], [1.0, 0.0]])  # <prefix mean, v_2> = 1 > 0
    with pytest.raises(PremiseViolated) as err:
        engine.pythagorean_check(vs, 1.0)
    assert err.value.index == 2


def test_pythagorean_rejects_norm_violation():
    with pytest.raises(ValueError):
        engine.pythagorean_check(np.array([[2.0, 0.0]]), 1.0)
