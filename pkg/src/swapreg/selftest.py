"""Fast invariant suite behind `swapreg selftest`."""

from __future__ import annotations

import math

import numpy as np

from . import engine, evaluate, john, saddle
from .adversary import IidVertexAdversary
from .sets import Ball, Product


def _check(name: str, fn) -> bool:
    try:
        fn()
        print(f"PASS {name}")
        return True
    except Exception as exc:  # surface everything; this is a diagnostic tool
        print(f"FAIL {name}: {type(exc).__name__}: {exc}")
        return False


def run_selftest() -> int:
    rng = np.random.default_rng(7)
    checks = []

    def lmo_optimality():
        for s in (Ball(math.inf, 3), Ball(1.0, 3), Product((Ball(1.0, 2), Ball(math.inf, 2)))):
            for _ in range(50):
                c = rng.normal(size=s.dim)
                x = s.lmo(c)
                assert s.contains(x, 1e-9)
                for q in s.sample(rng, 20):
                    assert c @ x <= c @ q + 1e-9
    checks.append(_check("lmo optimality", lmo_optimality))

    def polar_pairing():
        for s in (Ball(math.inf, 3), Ball(1.0, 4), Product((Ball(1.0, 2), Ball(math.inf, 2)))):
            pol = s.polar()
            for _ in range(50):
                p = s.sample(rng, 1)[0]
                l = pol.sample(rng, 1)[0]
                assert p @ l <= 1.0 + 1e-9
    checks.append(_check("polar pairing", polar_pairing))

    def john_identity():
        for s in (Ball(math.inf, 4), Ball(1.0, 3),
                  Product((Ball(1.0, 2), Ball(math.inf, 2)))):
            _, decomp = john.john_precondition(s)
            assert decomp.identity_residual() <= 1e-4
            assert decomp.weight_sum_error() <= 1e-4
    checks.append(_check("john decomposition identity", john_identity))

    def engine_invariant():
        pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
        traj = engine.run(pset, lset, 50, IidVertexAdversary(lset, 3), solver="exact")
        assert all(r.invariant_value <= 1e-7 for r in traj.rounds)
        assert traj.certificate <= traj.certificate_bound + 1e-9
    checks.append(_check("per-round invariant + certificate", engine_invariant))

    def minimax_agreement():
        for _ in range(5):
            u = rng.normal(size=(2, 3))
            game = saddle.BilinearGame(u[:, :2], u[:, 2], Ball(math.inf, 2), Ball(1.0, 2))
            sp = saddle.solve_exact(game)
            assert sp.gap <= 1e-7
    checks.append(_check("exact saddle duality gap", minimax_agreement))

    def regret_ordering():
        pset, lset = Ball(math.inf, 2), Ball(1.0, 2)
        plays = pset.sample(rng, 30)
        losses = np.array([lset.vertex_array()[rng.integers(4)] for _ in range(30)])
        hist = evaluate.PlayHistory(pset, lset, plays, losses)
        lsr, _ = evaluate.linear_swap_regret(hist)
        ext = evaluate.external_regret(hist)
        assert lsr >= -1e-7 and lsr >= ext - 1e-7
    checks.append(_check("external <= linear swap", regret_ordering))

    def pythagorean():
        for _ in range(20):
            v = rng.normal(size=(40, 3))
            v /= np.maximum(np.linalg.norm(v, axis=1)[:, None], 1.0)
            eps = np.abs(rng.normal(size=40))
            try:
                holds, lhs, rhs = engine.pythagorean_check(v, 1.0, eps)
                assert holds
            except engine.PremiseViolated:
                pass
    checks.append(_check("pythagorean inequality", pythagorean))

    return 0 if all(checks) else 3
