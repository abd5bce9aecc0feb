"""Power allocation and cluster-head selection solvers.

The joint problem maximizes the network sum rate over the head selection and
the power-fraction matrix, subject to per-message rate floors, a unit power
budget, and one head per platoon. It is attacked in two ways:

* a two-stage heuristic: exhaustive head selection under gain-proportional
  power, then greedy discrete reallocation (``solve_s_chs_pa``), and
* desk-scale exhaustive oracles that enumerate every discrete allocation
  (``pa_oracle``) or every (selection, allocation) pair (``o_chs_pa_oracle``)
  and serve as ground truth for the heuristic.

The greedy stage walks the grid of integer power levels by repeatedly
locating the best single-level transfer between two messages (``opsa``) and
riding it while it keeps paying off. While any rate floor is violated the
objective is the worst floor slack; once feasible it is the sum rate, and
moves that would break a floor again are rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernel import (
    DecodePlan,
    build_plan,
    composition_count,
    compositions,
    evaluate_fractions,
    receiver_gain_table,
)
from .channel import ChannelMatrix, PowerConfig
from .scenario import PaMatrix, Scenario, SicConfig
from .topology import ChSelection, ScTopology


class EnumerationBudgetError(RuntimeError):
    """Exhaustive search would exceed the configured evaluation budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} evaluations, budget is {budget}")
        self.required = required
        self.budget = budget


DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class GpaConfig:
    """Grid resolution and iteration cap of the greedy allocator."""

    q_levels: int
    max_iterations: int = 100
    # literal pseudocode compatibility: gate extra transfers along a pair on
    # the pre-transfer allocation still being infeasible
    strict_inner_gate: bool = False

    def __post_init__(self) -> None:
        if self.q_levels < 1 or self.max_iterations < 1:
            raise ValueError("q_levels and max_iterations must be at least 1")


@dataclass(frozen=True)
class GpaMove:
    iteration: int
    src: int
    dst: int
    objective: str  # "slack" while infeasible, "sum" once feasible
    value: float


@dataclass(frozen=True)
class GpaTrace:
    initial_levels: tuple[int, ...]
    moves: tuple[GpaMove, ...] = field(default=())
    revisited: bool = False


@dataclass(frozen=True)
class AllocationResult:
    chs: ChSelection
    alpha: PaMatrix
    iterations_used: int
    feasible: bool
    sum_rate: float
    min_slack: float = math.nan
    trace: GpaTrace | None = None


@dataclass(frozen=True)
class OpsaResult:
    found: bool
    src: int = -1
    dst: int = -1


class _EvalContext:
    """Plan + gain table bound to one (realization, selection, scheme)."""

    def __init__(self, scenario: Scenario, channel: ChannelMatrix,
                 chs: ChSelection, power: PowerConfig, sic: SicConfig,
                 scheme: str):
        self.scenario = scenario
        self.power = power
        self.zeta = sic.zeta
        self.plan: DecodePlan = build_plan(scenario, scheme)
        self.gains, self.rx_lc = receiver_gain_table(
            channel, channel.topology, chs, scenario)
        self._lc_slices = _lc_row_slices(self.rx_lc, scenario.n_lc)

    def eval_fractions(self, fractions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return evaluate_fractions(self.plan, self.gains, self.rx_lc,
                                  fractions, self.power, self.zeta)

    def eval_levels(self, levels: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
        arr = np.atleast_2d(np.asarray(levels, dtype=np.float64)) / q
        return self.eval_fractions(arr)

    def eval_one(self, levels: np.ndarray, q: int) -> tuple[float, float]:
        sums, slacks = self.eval_levels(levels, q)
        return float(sums[0]), float(slacks[0])

    def eval_profiles(self, levels: np.ndarray, q: int
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sums, min slacks, and sorted per-message slack profiles."""
        arr = np.atleast_2d(np.asarray(levels, dtype=np.float64)) / q
        sums, slacks, rates = evaluate_fractions(
            self.plan, self.gains, self.rx_lc, arr, self.power, self.zeta,
            with_rates=True)
        profiles = np.sort(rates - self.plan.pair_rmin[None, :], axis=1)
        return sums, slacks, profiles

    def fpa_fractions(self) -> np.ndarray:
        return _fpa_fractions(self.scenario, self.gains, self._lc_slices)


def _lc_row_slices(rx_lc: np.ndarray, n_lc: int) -> list[slice]:
    slices = []
    for lc in range(n_lc):
        rows = np.flatnonzero(rx_lc == lc)
        slices.append(slice(rows[0], rows[-1] + 1) if len(rows) else slice(0, 0))
    return slices


def _fpa_fractions(scenario: Scenario, gains: np.ndarray,
                   lc_slices: list[slice]) -> np.ndarray:
    """Fractions proportional to the best receiving-member gain per message
    (shared messages use the mean over their recipients)."""
    weights = []
    for m in scenario.messages:
        bests = [float(gains[lc_slices[n], m.tx].max(initial=0.0))
                 for n in m.recipients]
        weights.append(sum(bests) / len(bests))
    weights = np.asarray(weights)
    total = weights.sum()
    if total <= 0:
        return np.full(len(weights), 1.0 / len(weights))
    return weights / total


def evaluate_pa(scenario: Scenario, channel: ChannelMatrix, chs: ChSelection,
                power: PowerConfig, sic: SicConfig, scheme: str,
                pa: PaMatrix) -> tuple[float, float]:
    """Sum rate and worst floor slack of a fixed allocation (fast path)."""
    ctx = _EvalContext(scenario, channel, chs, power, sic, scheme)
    fractions = np.asarray(pa.message_fractions(scenario))
    sums, slacks = ctx.eval_fractions(fractions)
    return float(sums[0]), float(slacks[0])


def epa(scenario: Scenario) -> PaMatrix:
    """Equal split of the budget over the distinct physical messages."""
    m = scenario.n_messages
    if m == 0:
        raise ValueError("scenario has no messages to power")
    return PaMatrix.from_message_fractions(scenario, [1.0 / m] * m)


def fpa(scenario: Scenario, channel: ChannelMatrix, chs: ChSelection) -> PaMatrix:
    """Fractional allocation: power proportional to channel gains."""
    ctx = _EvalContext(scenario, channel, chs, PowerConfig(), SicConfig(0.0), "oma")
    return PaMatrix.from_message_fractions(scenario, list(ctx.fpa_fractions()))


def round_fractions_to_levels(fractions: np.ndarray, q: int) -> np.ndarray:
    """Largest-remainder rounding onto the level grid, preserving the sum."""
    raw = np.asarray(fractions, dtype=np.float64) * q
    base = np.floor(raw).astype(np.int64)
    missing = q - int(base.sum())
    if missing > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:missing]] += 1
    return base


def _transfer_candidates(levels: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    m = len(levels)
    rows = []
    pairs = []
    for src in range(m):
        if levels[src] <= 0:
            continue
        for dst in range(m):
            if dst == src:
                continue
            cand = levels.copy()
            cand[src] -= 1
            cand[dst] += 1
            rows.append(cand)
            pairs.append((src, dst))
    if not rows:
        return np.empty((0, m), dtype=np.int64), []
    return np.stack(rows), pairs


def _lex_greater(a: np.ndarray, b: np.ndarray) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return bool(x > y)
    return False


def _opsa(ctx: _EvalContext, levels: np.ndarray, q: int, cur_sum: float,
          cur_slack: float, cur_profile: np.ndarray | None) -> OpsaResult:
    cands, pairs = _transfer_candidates(levels)
    if not pairs:
        return OpsaResult(found=False)
    if cur_slack < 0:
        # infeasible: lift the violation profile, worst slack first (the
        # lexicographic order breaks ties between equally-starved messages)
        _, _, profiles = ctx.eval_profiles(cands, q)
        best = -1
        for i in range(len(pairs)):
            ref = cur_profile if best < 0 else profiles[best]
            if _lex_greater(profiles[i], ref):
                best = i
        if best >= 0:
            return OpsaResult(True, *pairs[best])
        return OpsaResult(found=False)
    sums, slacks = ctx.eval_levels(cands, q)
    scored = np.where(slacks >= 0, sums, -np.inf)
    best = int(np.argmax(scored))
    if scored[best] > cur_sum:
        return OpsaResult(True, *pairs[best])
    return OpsaResult(found=False)


def opsa(alpha_levels: np.ndarray, q_levels: int, channel: ChannelMatrix,
         chs: ChSelection, scenario: Scenario, power: PowerConfig,
         sic: SicConfig, scheme: str) -> OpsaResult:
    """Best single-level transfer between two message coefficients.

    While the current allocation violates a rate floor the winning pair is
    the one that lifts the worst slack the most; otherwise it is the pair
    with the largest sum-rate gain that keeps every floor satisfied. Ties go
    to the first pair in (source, destination) scan order; ``found`` is False
    when nothing strictly improves the applicable criterion.
    """
    ctx = _EvalContext(scenario, channel, chs, power, sic, scheme)
    levels = np.asarray(alpha_levels, dtype=np.int64)
    sums, slacks, profiles = ctx.eval_profiles(levels, q_levels)
    return _opsa(ctx, levels, q_levels, float(sums[0]), float(slacks[0]),
                 profiles[0])


def _gpa(ctx: _EvalContext, config: GpaConfig,
         init_levels: np.ndarray, chs: ChSelection) -> AllocationResult:
    q = config.q_levels
    levels = init_levels.astype(np.int64).copy()
    sums0, slacks0, profiles0 = ctx.eval_profiles(levels, q)
    cur_sum, cur_slack, cur_profile = float(sums0[0]), float(slacks0[0]), profiles0[0]
    visited = {tuple(levels)}
    revisited = False
    moves: list[GpaMove] = []
    iterations = 0
    while iterations < config.max_iterations:
        iterations += 1
        step = _opsa(ctx, levels, q, cur_sum, cur_slack, cur_profile)
        if not step.found:
            break
        first = True
        while levels[step.src] > 0:
            cand = levels.copy()
            cand[step.src] -= 1
            cand[step.dst] += 1
            sums, slacks, profiles = ctx.eval_profiles(cand, q)
            cand_sum, cand_slack = float(sums[0]), float(slacks[0])
            if config.strict_inner_gate and not first:
                ok = cur_slack < 0 and cand_sum > cur_sum
            elif cur_slack < 0:
                ok = _lex_greater(profiles[0], cur_profile)
            else:
                ok = cand_slack >= 0 and cand_sum > cur_sum
            if not ok:
                break
            objective = "slack" if cur_slack < 0 else "sum"
            levels, cur_sum, cur_slack = cand, cand_sum, cand_slack
            cur_profile = profiles[0]
            moves.append(GpaMove(iterations, step.src, step.dst, objective,
                                 cur_slack if objective == "slack" else cur_sum))
            key = tuple(levels)
            if key in visited:
                revisited = True
            visited.add(key)
            first = False
    fractions = levels / q
    return AllocationResult(
        chs=chs,
        alpha=PaMatrix.from_message_fractions(ctx.scenario, list(fractions)),
        iterations_used=iterations,
        feasible=bool(cur_slack >= 0),
        sum_rate=cur_sum,
        min_slack=cur_slack,
        trace=GpaTrace(initial_levels=tuple(int(v) for v in init_levels),
                       moves=tuple(moves), revisited=revisited),
    )


def gpa(scenario: Scenario, channel: ChannelMatrix, chs: ChSelection,
        power: PowerConfig, sic: SicConfig, scheme: str, config: GpaConfig,
        alpha_init: np.ndarray | None = None) -> AllocationResult:
    """Greedy discrete power allocation (level-transfer descent).

    Starts from the gain-proportional allocation rounded onto the grid
    unless an explicit level vector is given, then repeatedly applies the
    best transfer found by :func:`opsa`, sliding additional levels along the
    same pair while each one still improves.
    """
    ctx = _EvalContext(scenario, channel, chs, power, sic, scheme)
    if alpha_init is None:
        init = round_fractions_to_levels(ctx.fpa_fractions(), config.q_levels)
    else:
        init = np.asarray(alpha_init, dtype=np.int64)
        if init.sum() != config.q_levels or (init < 0).any():
            raise ValueError("alpha_init must be non-negative levels summing to Q")
    return _gpa(ctx, config, init, chs)


def _best_indices(sums: np.ndarray, slacks: np.ndarray) -> tuple[int, bool]:
    """Index of the feasible sum-rate maximizer, falling back to the best
    worst-slack allocation; first occurrence wins ties."""
    feasible = slacks >= 0
    if feasible.any():
        scored = np.where(feasible, sums, -np.inf)
        return int(np.argmax(scored)), True
    return int(np.argmax(slacks)), False


def pa_oracle(scenario: Scenario, channel: ChannelMatrix, chs: ChSelection,
              power: PowerConfig, sic: SicConfig, scheme: str, q_levels: int,
              budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Exhaustive search over every discrete allocation of Q levels.

    Enumerates compositions in ascending lexicographic order, so tie-breaks
    resolve to the lexicographically smallest allocation. When no allocation
    meets every floor, the winner is the best violation profile in the same
    sorted-slack order the greedy search climbs (its first component is the
    worst slack, so it is in particular a best-worst-slack allocation).
    """
    m = scenario.n_messages
    required = composition_count(q_levels, m)
    if required > budget:
        raise EnumerationBudgetError(required, budget)
    ctx = _EvalContext(scenario, channel, chs, power, sic, scheme)
    levels = compositions(q_levels, m)
    best_idx = -1
    best_sum = -np.inf
    best_slack = -np.inf
    any_feasible = False
    chunk = 1 << 21
    for lo in range(0, required, chunk):
        part = levels[lo:lo + chunk]
        sums, slacks = ctx.eval_levels(part, q_levels)
        idx, feas = _best_indices(sums, slacks)
        if feas and (not any_feasible or sums[idx] > best_sum):
            any_feasible = True
            best_sum = float(sums[idx])
            best_slack = float(slacks[idx])
            best_idx = lo + idx
        elif not any_feasible and slacks[idx] > best_slack:
            best_slack = float(slacks[idx])
            best_sum = float(sums[idx])
            best_idx = lo + idx
    if not any_feasible:
        best_profile = None
        for lo in range(0, required, chunk):
            part = levels[lo:lo + chunk]
            sums, slacks, profiles = ctx.eval_profiles(part, q_levels)
            for i in range(len(part)):
                if best_profile is None or _lex_greater(profiles[i], best_profile):
                    best_profile = profiles[i]
                    best_idx = lo + i
                    best_sum = float(sums[i])
                    best_slack = float(slacks[i])
    chosen = levels[best_idx].astype(np.float64) / q_levels
    return AllocationResult(
        chs=chs,
        alpha=PaMatrix.from_message_fractions(scenario, list(chosen)),
        iterations_used=0,
        feasible=any_feasible,
        sum_rate=best_sum,
        min_slack=best_slack,
    )


def chs_exhaustive_fpa(scenario: Scenario, channel: ChannelMatrix,
                       topology: ScTopology, power: PowerConfig,
                       sic: SicConfig, scheme: str,
                       budget: int = DEFAULT_BUDGET) -> ChSelection:
    """Stage 1: rate every possible head combination under gain-proportional
    power and keep the feasible sum-rate maximizer (best worst-slack when
    nothing is feasible). Ties go to the first combination in scan order."""
    sizes = topology.lc_sizes()
    required = math.prod(sizes)
    if required > budget:
        raise EnumerationBudgetError(required, budget)
    best_combo = None
    best_sum = -np.inf
    best_slack = -np.inf
    any_feasible = False
    for combo in itertools.product(*[range(s) for s in sizes]):
        chs = ChSelection(ch_index_per_lc=combo)
        ctx = _EvalContext(scenario, channel, chs, power, sic, scheme)
        sums, slacks = ctx.eval_fractions(ctx.fpa_fractions())
        s, sl = float(sums[0]), float(slacks[0])
        if sl >= 0 and (not any_feasible or s > best_sum):
            any_feasible = True
            best_sum, best_slack, best_combo = s, sl, combo
        elif not any_feasible and sl > best_slack:
            best_sum, best_slack, best_combo = s, sl, combo
    assert best_combo is not None
    return ChSelection(ch_index_per_lc=best_combo)


def solve_s_chs_pa(scenario: Scenario, channel: ChannelMatrix,
                   topology: ScTopology, power: PowerConfig, sic: SicConfig,
                   scheme: str, gpa_config: GpaConfig,
                   budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Two-stage heuristic: exhaustive head selection under proportional
    power, then greedy discrete reallocation from the rounded start."""
    chs = chs_exhaustive_fpa(scenario, channel, topology, power, sic, scheme,
                             budget=budget)
    return gpa(scenario, channel, chs, power, sic, scheme, gpa_config)


def o_chs_pa_oracle(scenario: Scenario, channel: ChannelMatrix,
                    topology: ScTopology, power: PowerConfig, sic: SicConfig,
                    scheme: str, q_levels: int,
                    budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Joint exhaustive reference: every head combination crossed with every
    discrete allocation."""
    sizes = topology.lc_sizes()
    required = math.prod(sizes) * composition_count(q_levels, scenario.n_messages)
    if required > budget:
        raise EnumerationBudgetError(required, budget)
    best: AllocationResult | None = None
    for combo in itertools.product(*[range(s) for s in sizes]):
        chs = ChSelection(ch_index_per_lc=combo)
        result = pa_oracle(scenario, channel, chs, power, sic, scheme,
                           q_levels, budget=budget)
        if best is None:
            best = result
            continue
        if result.feasible and not best.feasible:
            best = result
        elif result.feasible and best.feasible and result.sum_rate > best.sum_rate:
            best = result
        elif not result.feasible and not best.feasible and result.min_slack > best.min_slack:
            best = result
    assert best is not None
    return best
