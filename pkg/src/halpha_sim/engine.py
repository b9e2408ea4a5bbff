"""Discrete-time simulation engine.

Each run starts from a freshly initialized population whose members carry a
back catalog of papers, then advances period by period: a share of agents is
selected to collaborate, teams form and publish, every live paper draws
citations, and each agent's h and h-alpha are recomputed.

State is kept in flat numpy arrays (papers and per-agent paper tables) so a
whole period is a handful of vector operations; the pure functions in
``model`` define the same quantities record by record and are used to
cross-check this implementation in the test suite.

Determinism: run ``i`` draws from a generator seeded with
(master_seed, spawn_key=i), so results are independent of execution order
and of how many runs share the experiment.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .distributions import (
    AgingCurve,
    CountDistribution,
    CountKind,
    _validate_count_params,
    draw_counts,
    expected_citations,
)
from .errors import ConfigurationError
from .model import EXTERNAL_AUTHOR, Agent, Paper

_SEED_MASK = (1 << 64) - 1
_NEG_KEY = np.iinfo(np.int64).min // 2

# Pre-simulation papers are one to five periods old at initialization.
INITIAL_AGE_MAX = 5


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class SimulationConfig:
    """Every parameter of one experiment (shared by all of its runs)."""

    runs: int
    n_agents: int
    periods: int
    coauthors_mean: int
    paper_dist: CountDistribution
    citation_kind: CountKind
    aging: AgingCurve
    alpha_share: float
    master_seed: int
    citation_dispersion: float | None = None
    collab_share: float = 1.0
    diligence_correlation: float = 0.0
    strategic: bool = False
    self_citation: bool = False
    boost_size: float = 0.0
    dynamic_alpha: bool = False

    def __post_init__(self) -> None:
        for name in ("runs", "n_agents", "periods", "coauthors_mean"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not 0.0 <= self.alpha_share <= 1.0:
            raise ConfigurationError(f"alpha_share must be in [0, 1], got {self.alpha_share}")
        if not 0.0 < self.collab_share <= 1.0:
            raise ConfigurationError(f"collab_share must be in (0, 1], got {self.collab_share}")
        if not 0.0 <= self.diligence_correlation <= 1.0:
            raise ConfigurationError(
                f"diligence_correlation must be in [0, 1], got {self.diligence_correlation}"
            )
        if self.boost_size < 0:
            raise ConfigurationError(f"boost_size must be nonnegative, got {self.boost_size}")
        if self.citation_kind is CountKind.NBINOMIAL:
            _validate_count_params(self.citation_kind, 0.0, self.citation_dispersion)
        if self.diligence_correlation > 0 and self.collab_share >= 1.0:
            warnings.warn(
                "diligence_correlation has no effect when collab_share is 1 "
                "(every agent publishes every period)",
                stacklevel=2,
            )


@dataclass
class PeriodMetrics:
    """Per-period snapshot of one run: indices per agent, plus the teams formed."""

    run_index: int
    period: int
    h: np.ndarray  # (n_agents,)
    h_alpha: np.ndarray  # (n_agents,)
    paper_counts: np.ndarray  # (n_agents,)
    teams: np.ndarray  # (n_teams, coauthors_mean), -1 padded


@dataclass
class RunResult:
    """One complete run: frozen initial h values and all period snapshots."""

    run_index: int
    initial_h: np.ndarray
    periods: list[PeriodMetrics]


@dataclass
class SimulationState:
    """Array-backed state of a single run.

    Paper rows 0..n_papers-1 are valid; ``authors`` pads short teams with -1.
    ``agent_papers[i, :agent_paper_counts[i]]`` lists agent i's paper ids.
    """

    run_index: int
    period: int
    rng: np.random.Generator
    n_agents: int
    n_papers: int
    citations: np.ndarray
    published_period: np.ndarray
    alpha_author: np.ndarray
    boost_anchor: np.ndarray  # max author h at publication, frozen
    authors: np.ndarray
    agent_papers: np.ndarray
    agent_paper_counts: np.ndarray
    initial_h: np.ndarray
    current_h: np.ndarray
    current_h_alpha: np.ndarray
    citation_means: np.ndarray  # expected citations indexed by age
    diligence_z: np.ndarray | None = None

    @property
    def papers(self) -> list[Paper]:
        """Materialized per-paper records (inspection and tests, not the hot path)."""
        out = []
        for pid in range(self.n_papers):
            row = self.authors[pid]
            out.append(
                Paper(
                    id=pid,
                    author_ids=[int(a) for a in row[row >= 0]],
                    alpha_author_id=int(self.alpha_author[pid]),
                    published_period=int(self.published_period[pid]),
                    citations=int(self.citations[pid]),
                )
            )
        return out

    @property
    def agents(self) -> list[Agent]:
        """Materialized per-agent records (inspection and tests, not the hot path)."""
        return [
            Agent(
                id=i,
                paper_ids=[int(p) for p in self.agent_papers[i, : self.agent_paper_counts[i]]],
                initial_h=int(self.initial_h[i]),
                current_h=int(self.current_h[i]),
                current_h_alpha=int(self.current_h_alpha[i]),
            )
            for i in range(self.n_agents)
        ]


def rank_normal_scores(values) -> np.ndarray:
    """Map values to standard-normal scores by rank (ties share the average rank)."""
    values = np.asarray(values)
    ranks = rankdata(values, method="average")
    return ndtri((ranks - 0.5) / values.size)


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Generator for one run, derived solely from (master_seed, run_index)."""
    seq = np.random.SeedSequence(entropy=master_seed & _SEED_MASK, spawn_key=(run_index,))
    return np.random.default_rng(seq)


def _collaborator_count(config: SimulationConfig) -> int:
    return min(config.n_agents, round_half_away(config.collab_share * config.n_agents))


def _teams_per_period(config: SimulationConfig) -> int:
    m = _collaborator_count(config)
    return -(-m // config.coauthors_mean) if m else 0


def init_state(config: SimulationConfig, run_index: int) -> SimulationState:
    """Build the period-0 population for one run.

    Each agent draws its back-catalog size from the paper distribution; each
    of those papers is solo-attributed, one to five periods old, credited to
    its agent with probability alpha_share (otherwise to an outside
    collaborator), and carries citations accumulated age by age through the
    same aging-curve draws used in live periods.
    """
    rng = run_rng(config.master_seed, run_index)
    n = config.n_agents

    max_age = config.periods + INITIAL_AGE_MAX
    means = np.zeros(max_age + 1)
    means[1:] = [expected_citations(a, config.aging) for a in range(1, max_age + 1)]

    paper_counts = draw_counts(
        config.paper_dist.kind, config.paper_dist.mean, rng, config.paper_dist.dispersion, size=n
    ).astype(np.int64)
    total_initial = int(paper_counts.sum())

    owner = np.repeat(np.arange(n, dtype=np.int64), paper_counts)
    ages = rng.integers(1, INITIAL_AGE_MAX + 1, size=total_initial)
    is_own_alpha = rng.random(total_initial) < config.alpha_share

    citations = np.zeros(total_initial, dtype=np.int64)
    for a in range(1, INITIAL_AGE_MAX + 1):
        old_enough = ages >= a
        cnt = int(old_enough.sum())
        if cnt:
            citations[old_enough] += draw_counts(
                config.citation_kind, means[a], rng, config.citation_dispersion, size=cnt
            )

    capacity = total_initial + config.periods * _teams_per_period(config)
    width = max(1, config.coauthors_mean)

    state = SimulationState(
        run_index=run_index,
        period=0,
        rng=rng,
        n_agents=n,
        n_papers=total_initial,
        citations=np.zeros(capacity, dtype=np.int64),
        published_period=np.zeros(capacity, dtype=np.int64),
        alpha_author=np.full(capacity, EXTERNAL_AUTHOR, dtype=np.int64),
        boost_anchor=np.zeros(capacity, dtype=np.int64),
        authors=np.full((capacity, width), -1, dtype=np.int64),
        agent_papers=np.full(
            (n, int(paper_counts.max(initial=0)) + config.periods), -1, dtype=np.int64
        ),
        agent_paper_counts=paper_counts.copy(),
        initial_h=np.zeros(n, dtype=np.int64),
        current_h=np.zeros(n, dtype=np.int64),
        current_h_alpha=np.zeros(n, dtype=np.int64),
        citation_means=means,
    )
    state.citations[:total_initial] = citations
    state.published_period[:total_initial] = -ages
    state.alpha_author[:total_initial] = np.where(is_own_alpha, owner, EXTERNAL_AUTHOR)
    state.authors[:total_initial, 0] = owner

    starts = np.concatenate(([0], np.cumsum(paper_counts)[:-1]))
    slot = np.arange(total_initial) - np.repeat(starts, paper_counts)
    state.agent_papers[owner, slot] = np.arange(total_initial)

    _recompute_indices(state)
    state.initial_h = state.current_h.copy()
    state.boost_anchor[:total_initial] = state.initial_h[owner]

    if config.diligence_correlation > 0:
        state.diligence_z = rank_normal_scores(state.initial_h)
    return state


def select_collaborators(state: SimulationState, config: SimulationConfig) -> np.ndarray:
    """Pick the agents who publish this period.

    With no diligence correlation this is a uniform subset of
    round(collab_share * n) agents. Otherwise each agent gets a latent score
    rho * z + sqrt(1 - rho^2) * eps, where z is the rank-normal score of its
    initial h and eps is fresh standard-normal noise, and the top scorers are
    selected; rho is the diligence correlation.
    """
    count = _collaborator_count(config)
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    if config.diligence_correlation == 0:
        return state.rng.choice(config.n_agents, size=count, replace=False)
    rho = config.diligence_correlation
    eps = state.rng.standard_normal(config.n_agents)
    scores = rho * state.diligence_z + math.sqrt(1.0 - rho * rho) * eps
    return np.argsort(-scores, kind="stable")[:count].astype(np.int64)


def form_teams(
    collaborators: np.ndarray, config: SimulationConfig, state: SimulationState
) -> np.ndarray:
    """Partition collaborators into teams; one row per team, -1 padded.

    Random mode shuffles and chunks into groups of coauthors_mean, any
    remainder forming one smaller team. Strategic mode seeds each team with
    one of the top-h collaborators (ties to the smaller id) and deals the
    shuffled rest into the open slots.
    """
    m = len(collaborators)
    co = config.coauthors_mean
    if m == 0:
        return np.empty((0, co), dtype=np.int64)
    k = -(-m // co)
    if not config.strategic:
        padded = np.full(k * co, -1, dtype=np.int64)
        padded[:m] = state.rng.permutation(collaborators)
        return padded.reshape(k, co)
    ids = np.asarray(collaborators, dtype=np.int64)
    order = np.lexsort((ids, -state.current_h[ids]))
    seeds = ids[order[:k]]
    rest = state.rng.permutation(ids[order[k:]])
    fill = np.full(k * (co - 1), -1, dtype=np.int64)
    fill[: rest.size] = rest
    return np.concatenate([seeds[:, None], fill.reshape(k, co - 1)], axis=1)


def publish(teams: np.ndarray, state: SimulationState, config: SimulationConfig) -> None:
    """Append one zero-citation paper per team, crediting the highest-h member."""
    k = teams.shape[0]
    if k == 0:
        return
    valid = teams >= 0
    safe = np.where(valid, teams, 0)
    member_h = np.where(valid, state.current_h[safe], -1)
    # max h wins, ties to the smaller agent id
    key = np.where(valid, member_h * (state.n_agents + 1) - teams, _NEG_KEY)
    winner_col = np.argmax(key, axis=1)
    alpha = teams[np.arange(k), winner_col]

    ids = state.n_papers + np.arange(k)
    state.published_period[ids] = state.period
    state.alpha_author[ids] = alpha
    state.boost_anchor[ids] = member_h.max(axis=1)
    state.authors[ids, : teams.shape[1]] = teams
    state.n_papers += k

    members = teams[valid]
    paper_of_member = np.repeat(ids, valid.sum(axis=1))
    state.agent_papers[members, state.agent_paper_counts[members]] = paper_of_member
    state.agent_paper_counts[members] += 1


def cite_papers(state: SimulationState, config: SimulationConfig) -> None:
    """Give every paper at least one period old its citations for this period.

    On top of the age-dependent draw, a paper gains one self-citation when
    some author's current h exceeds its start-of-period citations by one or
    two (if enabled). With the boost on, a paper receives
    round(boost_anchor * boost_size) additional citations once, in its first
    citation period; papers from before the simulation never see it.
    """
    p = state.n_papers
    if p == 0:
        return
    age = state.period - state.published_period[:p]
    live = age >= 1

    gained = np.zeros(p, dtype=np.int64)
    gained[live] = draw_counts(
        config.citation_kind,
        state.citation_means[age[live]],
        state.rng,
        config.citation_dispersion,
    )

    if config.self_citation:
        amat = state.authors[:p]
        valid = amat >= 0
        author_h = np.where(valid, state.current_h[np.where(valid, amat, 0)], _NEG_KEY)
        lead = author_h - state.citations[:p, None]
        near_core = (((lead == 1) | (lead == 2)) & valid).any(axis=1)
        gained[live & near_core] += 1

    if config.boost_size > 0:
        first = age == 1
        extra = np.floor(state.boost_anchor[:p] * config.boost_size + 0.5).astype(np.int64)
        gained[first] += extra[first]

    state.citations[:p] += gained


def _recompute_indices(state: SimulationState) -> None:
    """Refresh every agent's current h and h-alpha from the citation table."""
    n = state.n_agents
    if state.citations.size == 0:  # no papers can ever exist under this config
        state.current_h = np.zeros(n, dtype=np.int64)
        state.current_h_alpha = np.zeros(n, dtype=np.int64)
        return
    width = state.agent_papers.shape[1]
    held = np.arange(width) < state.agent_paper_counts[:, None]
    pid = np.where(held, state.agent_papers, 0)
    cit = np.where(held, state.citations[pid], -1)

    by_citations = -np.sort(-cit, axis=1)
    state.current_h = (by_citations >= np.arange(1, width + 1)).sum(axis=1)

    # core order: citations desc, paper id asc (ids are globally unique)
    key = np.where(held, cit * np.int64(state.n_papers + 1) - pid, _NEG_KEY)
    order = np.argsort(-key, axis=1)
    own_alpha = held & (state.alpha_author[pid] == np.arange(n)[:, None])
    in_core = np.arange(width) < state.current_h[:, None]
    state.current_h_alpha = (np.take_along_axis(own_alpha, order, axis=1) & in_core).sum(axis=1)


def _reassign_alpha_authors(state: SimulationState) -> None:
    """Re-credit every paper to its currently highest-h author (ties to smaller id)."""
    p = state.n_papers
    amat = state.authors[:p]
    valid = amat >= 0
    author_h = np.where(valid, state.current_h[np.where(valid, amat, 0)], -1)
    key = np.where(valid, author_h * (state.n_agents + 1) - amat, _NEG_KEY)
    winner_col = np.argmax(key, axis=1)
    state.alpha_author[:p] = amat[np.arange(p), winner_col]


def step_period(state: SimulationState, config: SimulationConfig) -> PeriodMetrics:
    """Advance one period: select, team up, publish, cite, re-measure."""
    state.period += 1
    collaborators = select_collaborators(state, config)
    teams = form_teams(collaborators, config, state)
    publish(teams, state, config)
    cite_papers(state, config)
    _recompute_indices(state)
    if config.dynamic_alpha:
        _reassign_alpha_authors(state)
        _recompute_indices(state)
    return PeriodMetrics(
        run_index=state.run_index,
        period=state.period,
        h=state.current_h.copy(),
        h_alpha=state.current_h_alpha.copy(),
        paper_counts=state.agent_paper_counts.copy(),
        teams=teams,
    )


def _run_one(config: SimulationConfig, run_index: int) -> RunResult:
    state = init_state(config, run_index)
    metrics = [step_period(state, config) for _ in range(config.periods)]
    return RunResult(run_index=run_index, initial_h=state.initial_h.copy(), periods=metrics)


def run_experiment(config: SimulationConfig, max_workers: int | None = None) -> list[RunResult]:
    """Execute all runs of the experiment, in run-index order.

    Runs are independent and seeded from (master_seed, run_index), so the
    result is identical whether they execute serially or on a thread pool.
    """
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda i: _run_one(config, i), range(config.runs)))
    return [_run_one(config, i) for i in range(config.runs)]
