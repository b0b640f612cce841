"""Exact finite-strategy reference for the BRNE game.

With ``K`` pure strategies per agent every expectation is a finite sum, so
posteriors, the free energy and the players' objectives can be evaluated in
closed form. This is used to check the sampling solver and the equilibrium
properties without Monte-Carlo noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .strategy import SampledMixedStrategy, TimeGrid

RISK_CAP = 1e6


@dataclass(frozen=True, eq=False)
class DiscreteGame:
    """``risk[i, a]`` is the ``K x K`` risk between agent i's and agent a's strategies."""

    risk: NDArray[np.float64]
    nominals: NDArray[np.float64]

    def __post_init__(self):
        risk = np.minimum(np.array(self.risk, dtype=float), RISK_CAP)
        nominals = np.array(self.nominals, dtype=float)
        N, K = nominals.shape
        if N < 2:
            raise ValueError("a game needs at least two agents")
        if risk.shape != (N, N, K, K):
            raise ValueError(f"risk must have shape {(N, N, K, K)}")
        if np.any(risk < 0) or not np.all(np.isfinite(risk)):
            raise ValueError("risk must be finite and non-negative")
        if not np.allclose(risk, risk.transpose(1, 0, 3, 2), rtol=0, atol=0):
            raise ValueError("risk[i, a] must equal risk[a, i].T")
        if np.any(nominals < 0) or np.any(np.abs(nominals.sum(axis=1) - 1) > 1e-12):
            raise ValueError("nominals must be probability vectors")
        for i in range(N):
            risk[i, i] = 0.0
        risk.setflags(write=False)
        nominals.setflags(write=False)
        object.__setattr__(self, "risk", risk)
        object.__setattr__(self, "nominals", nominals)

    @property
    def n_agents(self) -> int:
        return self.nominals.shape[0]

    @property
    def n_strategies(self) -> int:
        return self.nominals.shape[1]


def random_game(seed, n_agents: int, n_strategies: int, risk_high: float = 2.0) -> DiscreteGame:
    """Uniform risks in ``[0, risk_high]`` and Dirichlet(1) nominals."""
    rng = np.random.default_rng(seed)
    N, K = n_agents, n_strategies
    risk = np.zeros((N, N, K, K))
    for i in range(N):
        for a in range(i + 1, N):
            r = rng.uniform(0.0, risk_high, (K, K))
            risk[i, a] = r
            risk[a, i] = r.T
    nominals = rng.dirichlet(np.ones(K), size=N)
    nominals /= nominals.sum(axis=1, keepdims=True)
    return DiscreteGame(risk, nominals)


def kl_divergence(p, q):
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def expected_risk(game: DiscreteGame, agent: int, current) -> NDArray[np.float64]:
    e = np.zeros(game.n_strategies)
    for a in range(game.n_agents):
        if a != agent:
            e += game.risk[agent, a] @ current[a]
    return np.minimum(e, RISK_CAP)


def exact_posterior(game: DiscreteGame, agent: int, current, sign: float = -1.0) -> NDArray[np.float64]:
    """Best response of ``agent``: ``nominal * exp(-E[r])`` normalized to sum 1."""
    nominal = game.nominals[agent]
    support = nominal > 0
    x = sign * expected_risk(game, agent, current)
    x = x - np.max(x[support])
    p = np.where(support, nominal * np.exp(x), 0.0)
    return p / p.sum()


def objective(game: DiscreteGame, agent: int, strategies) -> float:
    """Player objective: joint risk with everyone else plus KL to the nominal."""
    p = strategies[agent]
    risk = sum(
        float(p @ game.risk[agent, a] @ strategies[a])
        for a in range(game.n_agents)
        if a != agent
    )
    return risk + kl_divergence(p, game.nominals[agent])


def joint_risk(game: DiscreteGame, strategies) -> float:
    N = game.n_agents
    return sum(
        float(strategies[i] @ game.risk[i, a] @ strategies[a])
        for i in range(N)
        for a in range(i + 1, N)
    )


def free_energy(game: DiscreteGame, strategies) -> float:
    kl = sum(kl_divergence(strategies[i], game.nominals[i]) for i in range(game.n_agents))
    return joint_risk(game, strategies) + kl


@dataclass
class ExactSolution:
    strategies: list[NDArray[np.float64]]
    free_energy_trace: list[float]
    iterations: int
    converged: bool
    history: list[list[NDArray[np.float64]]] = field(default_factory=list, repr=False)


def exact_solve(
    game: DiscreteGame,
    max_iters: int = 10_000,
    tol: float = 1e-14,
    sign: float = -1.0,
    step_tol: float = 1e-12,
) -> ExactSolution:
    """Gauss-Seidel sweeps of :func:`exact_posterior` until the free energy settles.

    A sweep counts as converged when F moved by at most ``tol`` (relative) and
    no probability moved by more than ``step_tol``. F is flat to second order
    near the fixed point, so the F test alone stops too early.
    """
    current = [p.copy() for p in game.nominals]
    trace = [free_energy(game, current)]
    history = []
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        step = 0.0
        for i in range(game.n_agents):
            new = exact_posterior(game, i, current, sign)
            step = max(step, float(np.max(np.abs(new - current[i]))))
            current[i] = new
        history.append([p.copy() for p in current])
        trace.append(free_energy(game, current))
        if abs(trace[-1] - trace[-2]) <= tol * max(1.0, abs(trace[-1])) and step <= step_tol:
            converged = True
            break
    return ExactSolution(current, trace, k, converged, history)


@dataclass(frozen=True)
class NashReport:
    max_violation: float
    is_nash: bool
    per_agent: tuple[float, ...]


def nash_verify(
    game: DiscreteGame, candidate, trials: int = 100, seed=0, threshold: float = 1e-8
) -> NashReport:
    """Largest gain any agent gets by deviating unilaterally from ``candidate``.

    Deviations tried: the exact best response and ``trials`` random
    distributions. A positive violation means the candidate is not a Nash
    equilibrium.
    """
    rng = np.random.default_rng(seed)
    candidate = [np.asarray(p, dtype=float) for p in candidate]
    per_agent = []
    for i in range(game.n_agents):
        base = objective(game, i, candidate)
        alts = [exact_posterior(game, i, candidate)]
        alts += list(rng.dirichlet(np.ones(game.n_strategies), size=trials))
        worst = -np.inf
        for alt in alts:
            trial = list(candidate)
            trial[i] = alt
            worst = max(worst, base - objective(game, i, trial))
        per_agent.append(float(worst))
    max_violation = max(per_agent)
    return NashReport(max_violation, max_violation <= threshold, tuple(per_agent))


def as_sampled(game: DiscreteGame):
    """Express the game as sampled strategies plus a matching risk hook.

    Agent ``i``'s "samples" are its ``K`` pure strategies with weights
    ``K * nominal`` (the nominal as proposal ratios against a uniform draw).
    The agent and strategy indices are encoded in the sample coordinates so
    the hook can look the risk up in the game's matrices.
    """
    N, K = game.nominals.shape
    grid = TimeGrid(2, 1.0)
    strategies = []
    for i in range(N):
        s = np.zeros((K, 2, 2))
        s[:, :, 0] = i
        s[:, :, 1] = np.arange(K)[:, None]
        strategies.append(SampledMixedStrategy(s, K * game.nominals[i], grid))

    def risk_fn(a_samples, b_samples):
        i = int(a_samples[0, 0, 0])
        a = int(b_samples[0, 0, 0])
        ka = a_samples[:, 0, 1].astype(int)
        kb = b_samples[:, 0, 1].astype(int)
        return game.risk[i, a][np.ix_(ka, kb)]

    return strategies, risk_fn
