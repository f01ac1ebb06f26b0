import math

import numpy as np
import pytest

from swapreg import engine
from swapreg.adversary import (CombinedAdversary, MovementAdversary,
                               PunishmentAdversary, best_punishment_deviation,
                               combined_certified_regret)
from swapreg.evaluate import PlayHistory, external_regret, linear_swap_regret
from swapreg.sets import Ball

RNG = np.random.default_rng(41)


def test_movement_period_pattern():
    mov = MovementAdversary(3, 12)
    x = np.array([1.0, 0.0, 0.0])
    assert np.allclose(mov(1, x), [-1.0, -0.5, -0.5])
    for t in range(2, 5):
        mov(t, x)
    assert np.allclose(mov(5, x), [0.0, -1.0, -0.5])
    for t in range(6, 9):
        mov(t, x)
    assert np.allclose(mov(9, x), [0.0, 0.0, -1.0])


def test_movement_losses_in_binf():
    mov = MovementAdversary(4, 16)
    box = Ball(math.inf, 4)
    for t in range(1, 17):
        y = mov(t, RNG.dirichlet(np.ones(4)))
        assert box.contains(y, 1e-12)


def test_movement_termination_trigger():
    # a learner stuck on the wrong vertex piles up swap regret: in period 1
    # it plays e_2 (loss -1/2) while the deviation to e_1 collects -1
    d, T = 2, 576
    mov = MovementAdversary(d, T)
    x = np.array([0.0, 1.0])
    for t in range(1, T // 2 + 1):
        y = mov(t, x)
    assert mov.terminated
    assert mov.termination_round == T // 2
    assert mov.termination_regret > d * math.sqrt(T)
    # after termination the emitted losses are zero
    for t in range(T // 2 + 1, T + 1):
        assert np.allclose(mov(t, x), 0.0)


def test_punishment_distribution():
    pun = PunishmentAdversary(4, 0)
    draws = np.array([pun(t, None) for t in range(100_000)])
    crossp = Ball(1.0, 4)
    assert np.allclose(np.abs(draws).sum(axis=1), 1.0)
    assert all(crossp.contains(l, 1e-12) for l in draws[:100])
    assert np.abs(draws.mean(axis=0)).max() <= 0.01
    second_moment = (draws ** 2).mean(axis=0)
    assert np.allclose(second_moment, 1.0 / 8.0, rtol=0.1)  # 1/(2d)


def test_punishment_d2_support():
    pun = PunishmentAdversary(2, 1)
    draws = {tuple(pun(t, None)) for t in range(200)}
    assert draws == {(0.5, -0.5), (-0.5, 0.5)}


def test_combined_scaling_and_membership():
    d, T = 3, 36
    adv = CombinedAdversary(d, T, seed=2)
    lset = CombinedAdversary.loss_set(d)
    pset = CombinedAdversary.strategy_set(d)
    rng = np.random.default_rng(0)
    for t in range(1, T + 1):
        play = pset.sample(rng, 1)[0]
        loss = adv(t, play)
        assert lset.contains(loss, 1e-9)
        # components satisfy their contracts after unscaling by 2
        assert Ball(math.inf, d).contains(2 * loss[:d], 1e-9)
        assert Ball(1.0, d).contains(2 * loss[d:], 1e-9)
        assert abs(play @ loss) <= 1.0 + 1e-9


def test_best_punishment_deviation_examples():
    value, M = best_punishment_deviation(np.zeros((5, 2)), RNG.normal(size=(5, 2)))
    assert value == 0.0
    value, M = best_punishment_deviation(np.array([[1.0, 0.0]]),
                                         np.array([[0.5, -0.5]]))
    assert value == pytest.approx(1.0)
    # matches brute force over sign matrices (objective separable per entry)
    xs = RNG.normal(size=(20, 2))
    ls = RNG.normal(size=(20, 2))
    value, M = best_punishment_deviation(xs, ls)
    assert np.abs(M).max() <= 1.0
    best = -np.inf
    import itertools
    for signs in itertools.product([-1.0, 1.0], repeat=4):
        Ms = np.array(signs).reshape(2, 2)
        best = max(best, -float(np.sum(ls * (xs @ Ms.T))))
    assert value == pytest.approx(best, abs=1e-9)


def test_restricted_family_is_endomorphism():
    # 100 random (A, x*, M) block deviations pass vertex-image feasibility
    d = 3
    pset = CombinedAdversary.strategy_set(d)
    verts = pset.vertex_array()
    rng = np.random.default_rng(8)
    for _ in range(100):
        # (A, x*): a random feasible endomorphism of B1 (contraction + shift)
        A = rng.uniform(-1, 1, size=(d, d))
        A /= max(np.abs(A).sum(axis=0).max(), 1.0)  # columns in B1
        scale = rng.uniform(0, 1)
        A *= scale
        x_star = rng.uniform(-1, 1, size=d)
        x_star *= (1 - scale) / max(np.abs(x_star).sum(), 1e-12) * rng.uniform(0, 1)
        M = rng.uniform(-1, 1, size=(d, d))
        phi_mat = np.zeros((2 * d, 2 * d))
        phi_mat[:d, :d] = A
        phi_mat[d:, :d] = M
        a_full = np.concatenate([x_star, np.zeros(d)])
        for v in verts:
            assert pset.contains(phi_mat @ v + a_full, 1e-9)


def test_combined_certified_regret_structure():
    d = 2
    T = 16 * d * d * (d + 1) * (d + 1)
    pset = CombinedAdversary.strategy_set(d)
    lset = CombinedAdversary.loss_set(d)
    adv = CombinedAdversary(d, T, seed=0)
    traj = engine.run_preconditioned(pset, lset, T, adv, solver="fpl",
                                     fpl_iters=200, seed=0)
    res = combined_certified_regret(adv)
    _, plays, losses = traj.original_frame()
    hist = PlayHistory(pset, lset, plays, losses)
    ext = external_regret(hist)
    assert res["value"] >= ext - 1e-9  # extended family dominates constants
    assert res["value"] >= 0.0
    dev = res["deviation"]
    # the assembled block deviation is a genuine endomorphism of the product
    for v in pset.vertex_array():
        assert pset.contains(dev.M @ v + dev.a, 1e-7)
    # certified value is a lower bound on the exact LP regret (d small enough)
    lp_value, _ = linear_swap_regret(hist, validate=False)
    assert res["value"] <= lp_value + 1e-6


def test_termination_implies_threshold_exceeded():
    d = 2
    T = 16 * d * d * (d + 1) * (d + 1)
    adv = CombinedAdversary(d, T, seed=0)
    lset = CombinedAdversary.loss_set(d)
    pset = CombinedAdversary.strategy_set(d)
    traj = engine.run_preconditioned(pset, lset, T, adv, solver="fpl",
                                     fpl_iters=150, seed=1)
    if adv.movement.terminated:
        assert adv.movement.termination_regret > d * math.sqrt(T)
        k = adv.movement.termination_round
        assert k % adv.movement.period_length == 0


def test_coverage_set_statistic():
    d = 2
    adv = CombinedAdversary(d, 16 * d * d * (d + 1) * (d + 1), seed=3)
    pset = CombinedAdversary.strategy_set(d)
    lset = CombinedAdversary.loss_set(d)
    engine.run_preconditioned(pset, lset, adv.T, adv, solver="fpl",
                              fpl_iters=150, seed=3)
    cover = adv.coverage_set()
    assert cover.size <= d
    assert all(0 <= i < d for i in cover)
    if not adv.movement.terminated:
        # low-swap-regret learners must cover a constant fraction of vertices
        assert cover.size >= d / 15
