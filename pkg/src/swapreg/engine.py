"""Response-based approachability loop.

Maintains the accumulator U_t = sum_tau (kappa_tau - s_tau) over points
kappa_t = (l_t (x) p_t, l_t) and targets s_t = (l*_t (x) b(l*_t), l*_t),
where (p_t, l*_t) is a (possibly approximate) minimax pair of the round game
on U_{t-1} and b is the best-response map b(l) = argmin_p <l, p>.

Two modes:
  * exact      -- the round game is solved on the raw accumulator and the
                  per-round inner product <U_{t-1}, kappa_t - s_t> is
                  certified nonpositive (up to solver tolerance);
  * normalized -- the game is solved on U_{t-1} / (t-1) and the measured
                  duality gap eps_t enters the certificate instead.

The driver records everything needed to evaluate regret and certificates
after the fact; nothing is estimated from theory when it can be measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdversaryFault, PremiseViolated
from .john import JohnDecomposition, Preconditioner, john_precondition
from .saddle import BilinearGame, SaddlePoint, solve_exact, solve_fpl
from .sets import ConvexSet, LinearImage

__all__ = ["Csp", "ApproachState", "RoundLog", "Trajectory", "step", "run",
           "run_preconditioned", "pythagorean_check"]


@dataclass
class Csp:
    """A point (l (x) p, l) of the approachability space R^{d x (d+1)}."""

    mat: np.ndarray  # (d, d)
    vec: np.ndarray  # (d,)

    @classmethod
    def from_pair(cls, loss: np.ndarray, play: np.ndarray) -> "Csp":
        return cls(np.outer(loss, play), loss.copy())

    def frob(self) -> float:
        return math.sqrt(float(np.sum(self.mat ** 2)) + float(np.sum(self.vec ** 2)))


def _flat_pair(loss: np.ndarray, play: np.ndarray, out: np.ndarray) -> np.ndarray:
    d = loss.size
    np.outer(loss, play, out=out[:, :d])
    out[:, d] = loss
    return out


@dataclass
class ApproachState:
    """Running accumulator and averages for the approachability loop."""

    dim: int
    t: int = 0
    U: np.ndarray = field(default=None)          # (d, d+1)
    kappa_sum: np.ndarray = field(default=None)  # (d, d+1)
    s_sum: np.ndarray = field(default=None)
    norm_bound: float = 0.0                      # measured max round norm B

    def __post_init__(self):
        d = self.dim
        if self.U is None:
            self.U = np.zeros((d, d + 1))
        if self.kappa_sum is None:
            self.kappa_sum = np.zeros((d, d + 1))
        if self.s_sum is None:
            self.s_sum = np.zeros((d, d + 1))

    @property
    def kappa_bar(self) -> Csp:
        t = max(self.t, 1)
        return Csp(self.kappa_sum[:, :-1] / t, self.kappa_sum[:, -1] / t)

    @property
    def s_bar(self) -> Csp:
        t = max(self.t, 1)
        return Csp(self.s_sum[:, :-1] / t, self.s_sum[:, -1] / t)

    def consistency_error(self) -> float:
        """|| U - t (kappa_bar - s_bar) || (should stay ~1e-12)."""
        return float(np.linalg.norm(self.U - (self.kappa_sum - self.s_sum)))


@dataclass
class RoundLog:
    t: int
    p_played: np.ndarray
    loss: np.ndarray
    s_target: Csp
    invariant_value: float  # <U_{t-1}, kappa_t - s_t>, raw accumulator units
    game_gap: float         # duality gap of the solved round game
    game_value: float
    eps: float              # gap in normalized units (enters certificates)
    inst_loss: float
    cert_norm: float        # ||kappa_bar_t - s_bar_t||_F after this round


@dataclass
class Trajectory:
    pset: ConvexSet
    lset: ConvexSet
    mode: str
    rounds: list
    plays: np.ndarray
    losses: np.ndarray
    kappa_bar: Csp
    s_bar: Csp
    norm_bound: float
    eps: np.ndarray
    state: ApproachState
    seed: int
    preconditioner: Preconditioner | None = None
    decomposition: JohnDecomposition | None = None
    plays_original: np.ndarray | None = None
    losses_original: np.ndarray | None = None
    pset_original: ConvexSet | None = None
    lset_original: ConvexSet | None = None
    mixtures: list | None = None
    pool_sizes: list | None = None

    @property
    def T(self) -> int:
        return len(self.rounds)

    @property
    def certificate(self) -> float:
        """||kappa_bar_T - s_bar_T||_F, an upper bound on the approachability loss."""
        diff_mat = self.kappa_bar.mat - self.s_bar.mat
        diff_vec = self.kappa_bar.vec - self.s_bar.vec
        return math.sqrt(float(np.sum(diff_mat ** 2)) + float(np.sum(diff_vec ** 2)))

    @property
    def mean_eps(self) -> float:
        return float(self.eps.mean()) if self.eps.size else 0.0

    @property
    def certificate_bound(self) -> float:
        return 2.0 * self.norm_bound / math.sqrt(max(self.T, 1)) + self.mean_eps

    def original_frame(self) -> tuple[ConvexSet, np.ndarray, np.ndarray]:
        if self.plays_original is not None:
            return self.pset_original, self.plays_original, self.losses_original
        return self.pset, self.plays, self.losses


def _solve_round(game: BilinearGame, solver, fpl_iters: int, round_seed: int) -> SaddlePoint:
    if solver == "exact":
        return solve_exact(game)
    if solver == "fpl":
        return solve_fpl(game, fpl_iters, round_seed)
    raise ValueError(f"unknown solver {solver!r}")


def step(state: ApproachState, pset: ConvexSet, lset: ConvexSet, adversary,
         solver: str = "exact", fpl_iters: int = 1000, normalized: bool = False,
         round_seed: int = 0, loss_tol: float = 1e-7) -> RoundLog:
    """Play one round; mutates `state` and returns the round log.

    `adversary` is called as adversary(t, p_t) after p_t is fixed, so
    adaptive adversaries are allowed.
    """
    d = state.dim
    t = state.t + 1
    denom = float(t - 1) if (normalized and t > 1) else 1.0
    game_u = state.U / denom if denom != 1.0 else state.U
    game = BilinearGame(game_u[:, :d], game_u[:, d], pset, lset)
    sp = _solve_round(game, solver, fpl_iters, round_seed)

    b_point = pset.lmo(sp.l_star)
    s_flat = _flat_pair(sp.l_star, b_point, np.empty((d, d + 1)))

    p_t = sp.p_star
    loss = np.asarray(adversary(t, p_t), dtype=float).ravel()
    if loss.size != d or not lset.contains(loss, loss_tol):
        raise AdversaryFault(f"loss at round {t} is outside the loss set")
    kappa_flat = _flat_pair(loss, p_t, np.empty((d, d + 1)))

    diff = kappa_flat - s_flat
    invariant_value = float(np.vdot(state.U, diff))
    if normalized and t > 1:
        eps = sp.gap
    else:
        eps = sp.gap / max(t - 1, 1)

    state.U += diff
    state.kappa_sum += kappa_flat
    state.s_sum += s_flat
    state.t = t
    kappa_norm = float(np.linalg.norm(kappa_flat))
    s_norm = float(np.linalg.norm(s_flat))
    state.norm_bound = max(state.norm_bound, kappa_norm, s_norm)

    cert_norm = float(np.linalg.norm(state.U)) / t  # == ||kappa_bar - s_bar||
    return RoundLog(
        t=t,
        p_played=p_t,
        loss=loss,
        s_target=Csp(s_flat[:, :d].copy(), s_flat[:, d].copy()),
        invariant_value=invariant_value,
        game_gap=sp.gap,
        game_value=sp.value,
        eps=eps,
        inst_loss=float(loss @ p_t),
        cert_norm=cert_norm,
    )


def run(pset: ConvexSet, lset: ConvexSet, T: int, adversary,
        solver: str = "exact", fpl_iters: int = 1000, normalized: bool | None = None,
        seed: int = 0, fpl_iters_schedule=None, round_sink: list | None = None) -> Trajectory:
    """Run the approachability loop for T rounds.

    `normalized` defaults to True for the FPL solver (approximate-equilibria
    mode) and False for the exact solver.  `fpl_iters_schedule` may map the
    round index to a per-round iteration budget.  `round_sink`, when given,
    receives each RoundLog as it completes so callers can flush partial
    output if a later round faults.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if normalized is None:
        normalized = solver == "fpl"
    d = pset.dim
    state = ApproachState(d)
    rng = np.random.default_rng(seed)
    rounds = []
    plays = np.empty((T, d))
    losses = np.empty((T, d))
    eps = np.empty(T)
    for t in range(1, T + 1):
        iters = fpl_iters if fpl_iters_schedule is None else int(fpl_iters_schedule(t))
        log = step(state, pset, lset, adversary, solver=solver, fpl_iters=iters,
                   normalized=normalized, round_seed=int(rng.integers(2 ** 63)))
        rounds.append(log)
        if round_sink is not None:
            round_sink.append(log)
        plays[t - 1] = log.p_played
        losses[t - 1] = log.loss
        eps[t - 1] = log.eps
    return Trajectory(
        pset=pset, lset=lset, mode="normalized" if normalized else "exact",
        rounds=rounds, plays=plays, losses=losses,
        kappa_bar=state.kappa_bar, s_bar=state.s_bar,
        norm_bound=state.norm_bound, eps=eps, state=state, seed=seed,
    )


def run_preconditioned(pset: ConvexSet, lset: ConvexSet, T: int, adversary,
                       solver: str = "exact", fpl_iters: int = 1000,
                       normalized: bool | None = None, seed: int = 0,
                       fpl_iters_schedule=None, round_sink: list | None = None) -> Trajectory:
    """John-position preconditioned loop.

    Computes A once so that A P is in John's position, then runs the loop on
    (P', L') = (A P, A^{-T} L) with the transported best-response map; plays
    are mapped back to the source frame before the adversary sees them.
    Both coordinate frames are recorded.
    """
    pre, decomp = john_precondition(pset)
    p_prime_set = pre.target
    l_prime_set = LinearImage(pre.inverse_transpose, lset)

    originals_p: list[np.ndarray] = []
    originals_l: list[np.ndarray] = []

    def transformed_adversary(t: int, p_prime: np.ndarray) -> np.ndarray:
        p = pre.point_to_source(p_prime)
        loss = np.asarray(adversary(t, p), dtype=float).ravel()
        if not lset.contains(loss, 1e-7):
            raise AdversaryFault(f"loss at round {t} is outside the loss set")
        originals_p.append(p)
        originals_l.append(loss)
        return pre.loss_to_target(loss)

    traj = run(p_prime_set, l_prime_set, T, transformed_adversary, solver=solver,
               fpl_iters=fpl_iters, normalized=normalized, seed=seed,
               fpl_iters_schedule=fpl_iters_schedule, round_sink=round_sink)
    traj.preconditioner = pre
    traj.decomposition = decomp
    traj.plays_original = np.array(originals_p)
    traj.losses_original = np.array(originals_l)
    traj.pset_original = pset
    traj.lset_original = lset
    return traj


def pythagorean_check(vectors, bound: float, eps=None,
                      premise_slack: float = 1e-9):
    """Verify the (approximate) Pythagorean inequality on a vector sequence.

    Checks the premise <mean of v_1..v_{t-1}, v_t> <= eps_t for every t >= 2
    (raising PremiseViolated(t) at the first failure) and then returns
    (holds, lhs, rhs) for

        lhs = ||sum_t v_t||,   rhs = sqrt(T B^2 + 2 sum_t (t-1) eps_t).
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    T = V.shape[0]
    if eps is None:
        eps_arr = np.zeros(T)
    else:
        eps_arr = np.asarray(eps, dtype=float).ravel()
        if eps_arr.size != T:
            raise ValueError("eps must have one entry per vector")
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms > bound * (1.0 + 1e-9) + 1e-12):
        raise ValueError("a vector exceeds the stated norm bound")
    scale = max(bound, 1.0)
    running = np.zeros(V.shape[1])
    for t in range(2, T + 1):
        running += V[t - 2]
        if float(running @ V[t - 1]) / (t - 1) > eps_arr[t - 1] + premise_slack * scale:
            raise PremiseViolated(t)
    running += V[T - 1]
    lhs = float(np.linalg.norm(running))
    rhs = math.sqrt(T * bound ** 2 + 2.0 * float(np.sum(np.arange(T) * eps_arr)))
    return lhs <= rhs + 1e-9 * (1.0 + rhs), lhs, rhs
