"""Iterative Bayesian update (BRNE) over sampled mixed strategies.

Each agent's posterior is its nominal reweighted by ``exp(-E[r])``, the
expected collision risk against every other agent's current strategy. Agents
are updated one at a time in ascending index order (Gauss-Seidel), so agent
``i`` sees the already-updated strategies of agents ``< i`` and the previous
sweep's strategies of agents ``> i``.

Two sample representations are supported:

* importance sampling (``"is"``): the sample sets are drawn once from the
  nominals and only the weights change. The pairwise risk matrices are
  computed once per solve, after which a sweep is a handful of
  matrix-vector products.
* rejection sampling (``"rs"``): each update redraws the agent's full sample
  set from its nominal, accepting a candidate when ``gamma * u < exp(-(e - f))``
  with ``f`` the lowest candidate energy seen (see :func:`_rejection_sample`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .risk import RiskFn, RiskParams, make_risk_fn
from .strategy import (
    DegenerateWeightsError,
    SampledMixedStrategy,
    TimeGrid,
    check_same_grid,
    normalize_weights,
)

log = logging.getLogger(__name__)

MODES = ("is", "rs")
_MODE_ALIASES = {"importance-sampling": "is", "rejection-sampling": "rs"}

RS_MIN_ACCEPTANCE = 1e-4
RS_TRIAL_WINDOW = 100_000
RS_MAX_BATCH = 20_000


class SolverError(RuntimeError):
    pass


class EnvelopeTooLooseError(SolverError):
    pass


class Nominal(Protocol):
    grid: TimeGrid

    def draw(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class SolveConfig:
    max_iterations: int = 10
    tolerance: float = 1e-4
    mode: str = "is"
    rejection_gamma: float = 1.2
    # rejection ratio exp(-(e - lowest e)) instead of exp(-e); same posterior
    rejection_shift: bool = True

    def __post_init__(self):
        mode = _MODE_ALIASES.get(self.mode, self.mode)
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not self.rejection_gamma > 1:
            raise ValueError("rejection_gamma must be > 1")


@dataclass
class SolveResult:
    strategies: list[SampledMixedStrategy]
    free_energy_trace: list[float]
    iterations_used: int
    converged: bool
    mode: str = "is"
    nominal_strategies: list[SampledMixedStrategy] = field(default_factory=list)
    kl: list[float] = field(default_factory=list)
    kl_terms: list[NDArray[np.float64]] = field(default_factory=list, repr=False)
    acceptance_rates: list[float] = field(default_factory=list)
    weights_history: list[list[NDArray[np.float64]]] = field(default_factory=list, repr=False)


def agent_seeds(rng_seed, n_agents: int) -> list[np.random.SeedSequence]:
    """Per-agent seed sequences: one int seeds all agents, a sequence maps 1:1."""
    if isinstance(rng_seed, (int, np.integer)):
        return [np.random.SeedSequence([int(rng_seed), i]) for i in range(n_agents)]
    seeds = list(rng_seed)
    if len(seeds) != n_agents:
        raise ValueError(f"expected {n_agents} per-agent seeds, got {len(seeds)}")
    return [s if isinstance(s, np.random.SeedSequence) else np.random.SeedSequence(s) for s in seeds]


def softmin_weights(base: NDArray[np.float64], energy: NDArray[np.float64], sign: float = -1.0):
    """``base * exp(sign * energy)`` rescaled to mean 1, shifted for stability.

    ``sign=-1`` is the Bayesian update; ``+1`` exists only as a mutation hook
    for the verification suite.
    """
    support = base > 0
    if not np.any(support):
        raise DegenerateWeightsError("base weights are all zero")
    x = sign * np.asarray(energy, dtype=float)
    x = x - np.max(x[support])
    w = np.where(support, base * np.exp(x), 0.0)
    return normalize_weights(w)


def kl_estimate(strategy: SampledMixedStrategy, base_weights: ArrayLike | None = None) -> float:
    """Monte-Carlo KL(p || p') for weights ``w = p/p'`` on samples from ``p'``.

    With non-uniform proposal ratios ``base_weights`` the estimate is
    ``mean(w * log(w / base))``. Zero weights contribute zero.
    """
    w = strategy.weights
    base = np.ones_like(w) if base_weights is None else np.asarray(base_weights, dtype=float)
    return float(np.mean(_kl_terms(w, base)))


def _kl_terms(w, base):
    pos = w > 0
    out = np.zeros_like(w)
    out[pos] = w[pos] * np.log(w[pos] / base[pos])
    return out


def _pair_matrices(samples: Sequence[NDArray], risk_fn: RiskFn) -> dict[tuple[int, int], NDArray]:
    n = len(samples)
    return {(i, a): risk_fn(samples[i], samples[a]) for i in range(n) for a in range(i + 1, n)}


def _mat(mats, i, a):
    return mats[(i, a)] if i < a else mats[(a, i)].T


def _expected_risk(i, weights, mats, n):
    e = None
    for a in range(n):
        if a == i:
            continue
        term = _mat(mats, i, a) @ weights[a] / weights[a].shape[0]
        e = term if e is None else e + term
    return e


def _joint_risk_sum(weights, mats):
    total = 0.0
    for (i, a), R in mats.items():
        total += float(weights[i] @ R @ weights[a]) / (weights[i].shape[0] * weights[a].shape[0])
    return total


def _check_strategies(strategies):
    if len(strategies) < 2:
        raise ValueError("need at least two agents")
    return check_same_grid(*(s.grid for s in strategies))


def update_agent_weights_is(
    agent: int,
    strategies: Sequence[SampledMixedStrategy],
    params: RiskParams,
    risk_fn: RiskFn | None = None,
    base_weights: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Importance-sampling posterior weights of ``agent`` against the others.

    ``strategies`` holds the current strategies of all agents, so the
    Gauss-Seidel ordering is whatever the caller has already updated.
    ``base_weights`` are the proposal ratios of the agent's nominal (ones for
    samples drawn from the nominal itself).
    """
    _check_strategies(strategies)
    fn = risk_fn or make_risk_fn(params)
    mine = strategies[agent]
    e = np.zeros(mine.n_samples)
    for a, other in enumerate(strategies):
        if a != agent:
            e += fn(mine.samples, other.samples) @ other.weights / other.n_samples
    base = np.ones(mine.n_samples) if base_weights is None else np.asarray(base_weights, float)
    return softmin_weights(base, e)


def free_energy(
    strategies: Sequence[SampledMixedStrategy],
    params: RiskParams,
    risk_fn: RiskFn | None = None,
    base_weights: Sequence[ArrayLike] | None = None,
) -> float:
    """Pairwise joint expected risk plus per-agent KL to the nominal."""
    _check_strategies(strategies)
    fn = risk_fn or make_risk_fn(params)
    mats = _pair_matrices([s.samples for s in strategies], fn)
    weights = [s.weights for s in strategies]
    bases = base_weights or [None] * len(strategies)
    return _joint_risk_sum(weights, mats) + sum(
        kl_estimate(s, b) for s, b in zip(strategies, bases)
    )


def _rel_change(new, old):
    return abs(new - old) / max(abs(new), 1.0)


def solve_samples(
    strategies: Sequence[SampledMixedStrategy],
    config: SolveConfig,
    params: RiskParams,
    risk_fn: RiskFn | None = None,
    record_history: bool = False,
    exponent_sign: float = -1.0,
) -> SolveResult:
    """Weights-only (importance-sampling) BRNE on a frozen sample set.

    The incoming weights of each strategy are taken as its proposal ratios
    (the nominal); the sweeps start from the nominal.
    """
    _check_strategies(strategies)
    n = len(strategies)
    fn = risk_fn or make_risk_fn(params)
    base = [normalize_weights(s.weights) for s in strategies]
    mats = _pair_matrices([s.samples for s in strategies], fn)
    weights = [b.copy() for b in base]

    def energy():
        kl = sum(float(np.mean(_kl_terms(w, b))) for w, b in zip(weights, base))
        return _joint_risk_sum(weights, mats) + kl

    trace = [energy()]
    history = []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        for i in range(n):
            weights[i] = softmin_weights(base[i], _expected_risk(i, weights, mats, n), exponent_sign)
        trace.append(energy())
        if record_history:
            history.append([w.copy() for w in weights])
        if _rel_change(trace[-1], trace[-2]) < config.tolerance:
            converged = True
            break
    nominal = [s.with_weights(b) for s, b in zip(strategies, base)]
    kl_terms = [_kl_terms(w, b) for w, b in zip(weights, base)]
    return SolveResult(
        strategies=[s.with_weights(w) for s, w in zip(strategies, weights)],
        free_energy_trace=trace,
        iterations_used=it,
        converged=converged,
        mode="is",
        nominal_strategies=nominal,
        kl=[float(np.mean(t)) for t in kl_terms],
        kl_terms=kl_terms,
        weights_history=history,
    )


@dataclass
class _RejectionDraw:
    samples: NDArray[np.float64]
    energies: NDArray[np.float64]
    n_candidates: int
    log_z: float  # log of the candidates' mean likelihood, estimates log E_nominal[exp(-e)]


def _candidate_energy(cands, others, fn):
    e = np.zeros(cands.shape[0])
    for other in others:
        e += fn(cands, other.samples) @ other.weights / other.n_samples
    return e


def _rejection_sample(nominal, others, M, gamma, rng, fn, shift=True) -> _RejectionDraw:
    """Draw ``M`` samples from ``nominal * exp(-e)`` by rejection.

    The likelihood is only fixed up to a constant, so with ``shift`` a
    candidate is accepted when ``gamma * u < exp(-(e - f))`` where ``f`` is
    the lowest energy seen so far. Any fixed ``f`` leaves the accepted
    distribution unchanged; keeping ``f`` at or below every candidate's energy
    keeps the ratio within (0, 1]. This removes risk that every candidate
    shares (an unavoidable close start, say) from the acceptance rate.
    """
    accepted_s, accepted_e = [], []
    n_acc = 0
    n_cand = 0
    floor = np.inf if shift else 0.0
    lik_sum = 0.0  # sum of exp(-(e - floor)) over the candidates used
    rate = 1.0 / gamma
    while n_acc < M:
        need = M - n_acc
        batch = int(min(RS_MAX_BATCH, max(M, np.ceil(1.2 * need / max(rate, 1e-6)))))
        cands = nominal.draw(batch, rng)
        u = rng.random(batch)
        e = _candidate_energy(cands, others, fn)
        if shift and e.min() < floor:
            new_floor = float(e.min())
            if n_cand:
                lik_sum *= np.exp(new_floor - floor)
            floor = new_floor
        lik = np.exp(-(e - floor))
        hits = np.flatnonzero(gamma * u < lik)
        used = batch
        if hits.size >= need:
            used = hits[need - 1] + 1
            hits = hits[:need]
        n_cand += used
        lik_sum += float(np.sum(lik[:used]))
        accepted_s.append(cands[hits])
        accepted_e.append(e[hits])
        n_acc += hits.size
        rate = max(n_acc, 1) / n_cand
        if n_acc < M and n_cand >= RS_TRIAL_WINDOW and n_acc / n_cand < RS_MIN_ACCEPTANCE:
            raise EnvelopeTooLooseError(
                f"rejection sampling accepted {n_acc}/{n_cand} candidates "
                f"(< {RS_MIN_ACCEPTANCE:g}); lower the risk scale or gamma"
            )
    log_z = float(np.log(lik_sum / n_cand)) - floor
    return _RejectionDraw(np.concatenate(accepted_s), np.concatenate(accepted_e), int(n_cand), log_z)


def update_agent_strategy_rs(
    agent: int,
    nominal: Nominal,
    strategies: Sequence[SampledMixedStrategy],
    params: RiskParams,
    gamma: float,
    rng_seed,
    risk_fn: RiskFn | None = None,
    shift: bool = True,
) -> SampledMixedStrategy:
    """Redraw ``agent``'s samples from its nominal by rejection sampling.

    ``shift=False`` uses the unshifted ratio ``exp(-e)``.
    """
    if not gamma > 1:
        raise ValueError("gamma must be > 1")
    fn = risk_fn or make_risk_fn(params)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    M = strategies[agent].n_samples
    others = [s for a, s in enumerate(strategies) if a != agent]
    draw = _rejection_sample(nominal, others, M, gamma, rng, fn, shift)
    return SampledMixedStrategy(draw.samples, np.ones(M), nominal.grid)


def _solve_rs(nominals, config, params, seeds, M, fn) -> SolveResult:
    n = len(nominals)
    grid = check_same_grid(*(nm.grid for nm in nominals))
    rngs = [np.random.default_rng(s) for s in seeds]
    current = [SampledMixedStrategy(nm.draw(M, r), np.ones(M), grid) for nm, r in zip(nominals, rngs)]
    initial = list(current)
    ones = [np.ones(M)] * n

    def joint(strats):
        return _joint_risk_sum(ones, _pair_matrices([s.samples for s in strats], fn))

    trace = [joint(current)]
    kl = [0.0] * n
    kl_terms = [np.zeros(M)] * n
    rates = [1.0] * n
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        for i in range(n):
            others = current[:i] + current[i + 1:]
            draw = _rejection_sample(nominals[i], others, M, config.rejection_gamma, rngs[i], fn,
                                     config.rejection_shift)
            current[i] = SampledMixedStrategy(draw.samples, np.ones(M), grid)
            # accepted samples come from p = p' exp(-e) / Z, so log(p/p') = -e - log Z
            kl_terms[i] = -draw.energies - draw.log_z
            kl[i] = max(0.0, float(np.mean(kl_terms[i])))
            rates[i] = M / draw.n_candidates
        trace.append(joint(current) + sum(kl))
        if _rel_change(trace[-1], trace[-2]) < config.tolerance:
            converged = True
            break
    return SolveResult(
        strategies=current,
        free_energy_trace=trace,
        iterations_used=it,
        converged=converged,
        mode="rs",
        nominal_strategies=initial,
        kl=kl,
        kl_terms=kl_terms,
        acceptance_rates=rates,
    )


def solve(
    nominals: Sequence[Nominal],
    config: SolveConfig,
    params: RiskParams,
    rng_seed,
    M: int = 100,
    risk_fn: RiskFn | None = None,
) -> SolveResult:
    """Run BRNE from the given nominal strategies.

    ``rng_seed`` is either one integer (per-agent streams are derived from it)
    or a sequence of per-agent seeds.
    """
    if len(nominals) < 2:
        raise ValueError("need at least two agents")
    seeds = agent_seeds(rng_seed, len(nominals))
    fn = risk_fn or make_risk_fn(params)
    if config.mode == "rs":
        return _solve_rs(nominals, config, params, seeds, M, fn)
    grid = check_same_grid(*(nm.grid for nm in nominals))
    strategies = [
        SampledMixedStrategy(nm.draw(M, np.random.default_rng(s)), np.ones(M), grid)
        for nm, s in zip(nominals, seeds)
    ]
    return solve_samples(strategies, config, params, fn)


@dataclass(frozen=True)
class RiskReduction:
    lhs: float
    rhs: float
    tolerance: float
    holds: bool


def _joint_with_se(a, b, fn):
    R = fn(a.samples, b.samples)
    Ma, Mb = a.n_samples, b.n_samples
    row = a.weights * (R @ b.weights) / Mb
    col = b.weights * (a.weights @ R) / Ma
    value = float(row.mean())
    var = (row.var(ddof=1) / Ma if Ma > 1 else 0.0) + (col.var(ddof=1) / Mb if Mb > 1 else 0.0)
    return value, var


def risk_reduction_check(
    result: SolveResult,
    params: RiskParams,
    nominals: Sequence[Nominal] | None = None,
    rng_seed=None,
    risk_fn: RiskFn | None = None,
    mc_sigmas: float = 3.0,
) -> RiskReduction:
    """Check that nominal joint risk minus equilibrium joint risk >= total KL.

    By default the nominal risk is evaluated on the solve's own nominal sample
    sets. Passing ``nominals`` and ``rng_seed`` evaluates it on a fresh,
    independent draw instead. The tolerance is ``mc_sigmas`` combined
    standard errors of the estimators involved.
    """
    fn = risk_fn or make_risk_fn(params)
    post = result.strategies
    n = len(post)
    if nominals is not None and rng_seed is not None:
        seeds = agent_seeds(rng_seed, n)
        M = post[0].n_samples
        nom = [
            SampledMixedStrategy(nm.draw(M, np.random.default_rng(s)), np.ones(M), nm.grid)
            for nm, s in zip(nominals, seeds)
        ]
    else:
        nom = result.nominal_strategies
    var = 0.0
    nominal_risk = posterior_risk = 0.0
    for i in range(n):
        for a in range(i + 1, n):
            v, s2 = _joint_with_se(nom[i], nom[a], fn)
            nominal_risk += v
            var += s2
            v, s2 = _joint_with_se(post[i], post[a], fn)
            posterior_risk += v
            var += s2
    rhs = float(sum(result.kl))
    for t in result.kl_terms:
        if t.size > 1:
            var += float(np.var(t, ddof=1)) / t.size
    lhs = nominal_risk - posterior_risk
    tol = mc_sigmas * float(np.sqrt(var)) + 1e-12 * max(1.0, abs(nominal_risk))
    return RiskReduction(lhs=lhs, rhs=rhs, tolerance=tol, holds=bool(lhs >= rhs - tol))
