"""Bilevel planning: discrete skeleton search plus sample-refine-backtrack.

Skeletons come from A* over ground atoms (unit costs, goal-count heuristic,
insertion-order tie-breaking). Refinement samples continuous parameters one
step at a time with per-step attempt caps and a global sample budget; on an
invalid transition it backtracks past every step whose counter is full,
resetting those counters, and resamples the latest step with room left.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .domains import DOMAINS, Problem
from .world import (
    GroundAbstractAction,
    Invalid,
    Operator,
    WorldState,
    abstract_state,
    apply_abstract,
    ground_operators,
    simulate,
)


class NoSkeleton(RuntimeError):
    """The abstract problem has no solution within the depth bound."""


@dataclass(frozen=True)
class Skeleton:
    steps: tuple[GroundAbstractAction, ...]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PlannerConfig:
    max_skeletons: int = 1
    max_samples_per_step: int = 100
    sample_budget: int = 10_000
    max_depth: int = 50

    def __post_init__(self) -> None:
        if self.max_skeletons < 1 or self.max_samples_per_step < 1 or self.sample_budget < 1:
            raise ValueError("planner limits must be at least 1")


@dataclass
class PlanResult:
    solved: bool
    skeleton: Optional[Skeleton]
    params: Optional[list[np.ndarray]]
    samples_used: int
    per_step_counts: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "solved": self.solved,
            "samples_used": self.samples_used,
            "skeleton": [str(a) for a in self.skeleton.steps] if self.skeleton else None,
            "params": [np.asarray(p).tolist() for p in self.params] if self.params else None,
        }


def skeleton_gen(problem: Problem, operators: Optional[Sequence[Operator]] = None, max_depth: int = 50) -> Iterator[Skeleton]:
    """Lazily yield abstract solutions in nondecreasing plan-length order.

    Raises NoSkeleton if no solution exists within max_depth actions.
    """
    if operators is None:
        operators = DOMAINS[problem.domain].operators()
    start = abstract_state(problem.init)
    goal = problem.goal
    ground = ground_operators(operators, problem.init)

    def h(atoms) -> int:
        return sum(1 for a in goal if a not in atoms)

    counter = 0
    open_heap: list[tuple[int, int, int]] = []
    # Nodes are stored out-of-heap to keep heap entries cheap and orderable.
    nodes: list[tuple[frozenset, tuple[GroundAbstractAction, ...]]] = [(start, ())]
    heapq.heappush(open_heap, (h(start), counter, 0))
    closed: set[frozenset] = set()
    yielded = False
    while open_heap:
        _, _, idx = heapq.heappop(open_heap)
        atoms, path = nodes[idx]
        if atoms in closed:
            continue
        closed.add(atoms)
        if goal <= atoms:
            yielded = True
            yield Skeleton(path)
        if len(path) >= max_depth:
            continue
        for action in ground:
            succ = apply_abstract(atoms, action)
            if succ is None or succ in closed:
                continue
            counter += 1
            nodes.append((succ, path + (action,)))
            heapq.heappush(open_heap, (len(path) + 1 + h(succ), counter, len(nodes) - 1))
    if not yielded:
        raise NoSkeleton(f"no abstract solution within depth {max_depth}")


# ---------------------------------------------------------------------------
# Refinement


def refine_skeleton(
    init_state,
    steps: Sequence,
    sampler,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    simulate_fn: Callable,
    goal_fn: Callable,
    budget_left: int,
):
    """One skeleton refinement pass. Returns (status, samples_used, cnt, params, states).

    status is "solved", "failed", or "exhausted". The sampler must provide
    sample(state, step, rng) -> (phi, candidates_drawn) and
    num_candidates(step) -> int for budget prechecks.
    """
    n = len(steps)
    cnt = [0] * n
    used = 0
    if n == 0:
        status = "solved" if goal_fn(init_state) else "failed"
        return status, used, cnt, [], [init_state]
    states = [init_state] + [None] * n
    params: list = [None] * n
    m = cfg.max_samples_per_step
    i = 0
    while True:
        if used + sampler.num_candidates(steps[i]) > budget_left:
            return "exhausted", used, cnt, None, states
        phi, drawn = sampler.sample(states[i], steps[i], rng)
        used += drawn
        cnt[i] += 1
        out = simulate_fn(states[i], steps[i], phi)
        if isinstance(out, Invalid):
            while i >= 0 and cnt[i] == m:
                cnt[i] = 0
                i -= 1
            if i < 0:
                return "failed", used, cnt, None, states
            continue
        params[i] = phi
        states[i + 1] = out
        i += 1
        if i == n:
            if goal_fn(states[n]):
                return "solved", used, cnt, params, states
            return "failed", used, cnt, params, states


def solve(
    problem: Problem,
    sampler,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    operators: Optional[Sequence[Operator]] = None,
    simulate_fn: Callable = simulate,
) -> PlanResult:
    """Plan a problem end to end: skeletons from A*, parameters by sampling."""
    goal = problem.goal

    def goal_fn(state: WorldState) -> bool:
        return goal <= abstract_state(state)

    samples_used = 0
    cnt: list[int] = []
    try:
        gen = skeleton_gen(problem, operators, cfg.max_depth)
        for _ in range(cfg.max_skeletons):
            try:
                skeleton = next(gen)
            except StopIteration:
                break
            status, used, cnt, params, _ = refine_skeleton(
                problem.init,
                skeleton.steps,
                sampler,
                cfg,
                rng,
                simulate_fn,
                goal_fn,
                cfg.sample_budget - samples_used,
            )
            samples_used += used
            if status == "solved":
                return PlanResult(True, skeleton, params, samples_used, cnt)
            if status == "exhausted":
                break
    except NoSkeleton:
        pass
    return PlanResult(False, None, None, samples_used, cnt)


def replay_plan(problem: Problem, skeleton: Skeleton, params: Sequence[np.ndarray]) -> bool:
    """True iff sequentially simulating the plan succeeds and reaches the goal."""
    if len(skeleton.steps) != len(params):
        return False
    state = problem.init
    for action, phi in zip(skeleton.steps, params):
        out = simulate(state, action, phi)
        if isinstance(out, Invalid):
            return False
        state = out
    return problem.goal <= abstract_state(state)


class UniformParameterSampler:
    """Bounds-only sampler; one candidate per draw."""

    def num_candidates(self, step: GroundAbstractAction) -> int:
        return 1

    def sample(self, state, step: GroundAbstractAction, rng: np.random.Generator):
        bounds = step.controller.param_bounds
        return rng.uniform(bounds[:, 0], bounds[:, 1]), 1
