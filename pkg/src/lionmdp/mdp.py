"""Generic finite Markov decision process: representation, value iteration,
and two independent oracles (exact policy evaluation, exhaustive policy
enumeration) used to cross-check the solver.

States and actions can be any hashable objects. Action sets may differ per
state. Everything is materialized into dense per-(state, action) arrays at
construction time, after which the model is immutable and safe to share.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

State = Hashable
Action = Hashable

ROW_SUM_TOL = 1e-12
FIXED_POINT_TOL = 1e-10
ENUMERATION_LIMIT = 2 ** 20


class MdpModel:
    """Finite MDP with per-state admissible action sets.

    Parameters
    ----------
    states:
        Ordered collection of distinct state identifiers. The order fixes
        the tie-break for policy enumeration and the layout of all arrays.
    actions:
        Mapping from state to its ordered, nonempty action tuple.
    transition:
        Callable ``(s, a) -> mapping of next state to probability``.
        Omitted states get probability zero.
    reward:
        Callable ``(s, a, s_next) -> float``, defined for every next state.
    discount:
        Discount factor in [0, 1).
    """

    def __init__(
        self,
        states: Sequence[State],
        actions: Mapping[State, Sequence[Action]],
        transition: Callable[[State, Action], Mapping[State, float]],
        reward: Callable[[State, Action, State], float],
        discount: float,
    ):
        self._states = tuple(states)
        if len(set(self._states)) != len(self._states):
            raise ValueError("duplicate state identifiers")
        if not self._states:
            raise ValueError("state set is empty")
        if not 0.0 <= discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {discount}")
        self._index = {s: i for i, s in enumerate(self._states)}
        self._discount = float(discount)

        self._actions: dict[State, tuple[Action, ...]] = {}
        self._probs: dict[tuple[State, Action], np.ndarray] = {}
        self._rewards: dict[tuple[State, Action], np.ndarray] = {}
        n = len(self._states)
        for s in self._states:
            acts = tuple(actions[s])
            if not acts:
                raise ValueError(f"state {s!r} has no admissible actions")
            self._actions[s] = acts
            for a in acts:
                p = np.zeros(n)
                for s_next, prob in transition(s, a).items():
                    p[self._index[s_next]] = prob
                r = np.array([reward(s, a, s_next) for s_next in self._states], dtype=float)
                p.setflags(write=False)
                r.setflags(write=False)
                self._probs[(s, a)] = p
                self._rewards[(s, a)] = r

    @property
    def states(self) -> tuple[State, ...]:
        return self._states

    @property
    def discount(self) -> float:
        return self._discount

    def actions(self, s: State) -> tuple[Action, ...]:
        return self._actions[s]

    def state_index(self, s: State) -> int:
        return self._index[s]

    def transition(self, s: State, a: Action) -> dict[State, float]:
        """Transition distribution as a dict over states with nonzero mass."""
        row = self._probs[(s, a)]
        return {t: float(p) for t, p in zip(self._states, row) if p != 0.0}

    def reward(self, s: State, a: Action, s_next: State) -> float:
        return float(self._rewards[(s, a)][self._index[s_next]])

    def transition_row(self, s: State, a: Action) -> np.ndarray:
        """Probability row aligned with ``states`` order (read-only)."""
        return self._probs[(s, a)]

    def reward_row(self, s: State, a: Action) -> np.ndarray:
        """Per-next-state rewards aligned with ``states`` order (read-only)."""
        return self._rewards[(s, a)]

    def expected_reward(self, s: State, a: Action) -> float:
        return float(self._probs[(s, a)] @ self._rewards[(s, a)])


@dataclass(frozen=True)
class ValueFunction:
    """State-value map defined on exactly the model's state set."""

    values: Mapping[State, float]

    def __getitem__(self, s: State) -> float:
        return self.values[s]

    def as_array(self, states: Sequence[State]) -> np.ndarray:
        return np.array([self.values[s] for s in states], dtype=float)

    @classmethod
    def zeros(cls, states: Iterable[State]) -> "ValueFunction":
        return cls({s: 0.0 for s in states})

    @classmethod
    def from_array(cls, states: Sequence[State], arr: np.ndarray) -> "ValueFunction":
        return cls({s: float(v) for s, v in zip(states, arr)})


@dataclass(frozen=True)
class Policy:
    """Deterministic stationary policy: one admissible action per state."""

    actions: Mapping[State, Action]

    def __getitem__(self, s: State) -> Action:
        return self.actions[s]

    def items(self):
        return self.actions.items()


@dataclass(frozen=True)
class SolveReport:
    """Convergence record of one value-iteration run.

    ``deltas`` holds the sup-norm change of every iteration, in order, so
    callers can audit the contraction behaviour of the whole run.
    """

    iterations: int
    final_sup_norm_delta: float
    epsilon: float
    converged: bool
    deltas: tuple[float, ...] = field(repr=False, default=())


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the stochasticity check; reports, never raises."""

    passed: bool
    row_sums: dict[tuple[State, Action], float]
    violations: tuple[str, ...]


def validate_model(model: MdpModel) -> ValidationReport:
    """Check every (state, action) row for stochasticity.

    Passes iff each row's probabilities lie in [0, 1] and sum to 1 within
    ``ROW_SUM_TOL``, every state has at least one action, and the discount
    is below 1. Violations are reported per (state, action).
    """
    violations: list[str] = []
    row_sums: dict[tuple[State, Action], float] = {}
    for s in model.states:
        acts = model.actions(s)
        if not acts:
            violations.append(f"state {s!r} has no admissible actions")
            continue
        for a in acts:
            row = model.transition_row(s, a)
            total = float(row.sum())
            row_sums[(s, a)] = total
            if abs(total - 1.0) > ROW_SUM_TOL:
                violations.append(f"row ({s!r}, {a!r}) sums to {total!r}, expected 1")
            if (row < 0.0).any() or (row > 1.0).any():
                violations.append(f"row ({s!r}, {a!r}) has probabilities outside [0, 1]")
    if not 0.0 <= model.discount < 1.0:
        violations.append(f"discount {model.discount!r} outside [0, 1)")
    return ValidationReport(passed=not violations, row_sums=row_sums, violations=tuple(violations))


def bellman_backup(model: MdpModel, v: ValueFunction) -> tuple[ValueFunction, Policy]:
    """One optimality backup: maximize the expected one-step return.

    For each state the new value is max over admissible actions of
    sum over next states of p * (reward + discount * v(next)). Ties go to
    the earliest action in the state's action order.
    """
    arr = v.as_array(model.states)
    if not np.isfinite(arr).all():
        raise ValueError("value function has non-finite entries")
    new_vals, policy = _backup_arrays(model, arr)
    return ValueFunction.from_array(model.states, new_vals), Policy(policy)


def _backup_arrays(model: MdpModel, v: np.ndarray) -> tuple[np.ndarray, dict[State, Action]]:
    gamma = model.discount
    out = np.empty(len(model.states))
    chosen: dict[State, Action] = {}
    for i, s in enumerate(model.states):
        best_q = -math.inf
        best_a = None
        for a in model.actions(s):
            p = model.transition_row(s, a)
            q = float(p @ model.reward_row(s, a)) + gamma * float(p @ v)
            if q > best_q:
                best_q, best_a = q, a
        out[i] = best_q
        chosen[s] = best_a
    return out, chosen


def value_iteration(
    model: MdpModel,
    epsilon: float = 1e-9,
    max_iter: int = 100_000,
) -> tuple[ValueFunction, Policy, SolveReport]:
    """Iterate optimality backups from the all-zeros value function.

    Stops when the sup-norm change drops below ``epsilon`` or after
    ``max_iter`` sweeps, whichever comes first. Deterministic: the same
    model yields bit-identical values, policy, and report.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    v = np.zeros(len(model.states))
    deltas: list[float] = []
    policy: dict[State, Action] = {}
    converged = False
    for _ in range(max_iter):
        new_v, policy = _backup_arrays(model, v)
        delta = float(np.max(np.abs(new_v - v)))
        deltas.append(delta)
        v = new_v
        if delta < epsilon:
            converged = True
            break
    report = SolveReport(
        iterations=len(deltas),
        final_sup_norm_delta=deltas[-1] if deltas else math.inf,
        epsilon=epsilon,
        converged=converged,
        deltas=tuple(deltas),
    )
    return ValueFunction.from_array(model.states, v), Policy(policy), report


def evaluate_policy_exact(model: MdpModel, pi: Policy) -> ValueFunction:
    """Exact value of a deterministic policy via a linear solve.

    Solves (I - discount * P_pi) V = R_pi, the unique fixed point of the
    policy's backup (the system is nonsingular for discount < 1).
    """
    n = len(model.states)
    p_pi = np.empty((n, n))
    r_pi = np.empty(n)
    for i, s in enumerate(model.states):
        a = pi[s]
        if a not in model.actions(s):
            raise ValueError(f"policy action {a!r} not admissible in state {s!r}")
        p_pi[i] = model.transition_row(s, a)
        r_pi[i] = model.expected_reward(s, a)
    v = np.linalg.solve(np.eye(n) - model.discount * p_pi, r_pi)
    residual = np.max(np.abs(r_pi + model.discount * (p_pi @ v) - v))
    if residual > FIXED_POINT_TOL:
        raise ArithmeticError(f"policy evaluation residual {residual} exceeds {FIXED_POINT_TOL}")
    return ValueFunction.from_array(model.states, v)


def enumerate_policies_brute_force(model: MdpModel) -> tuple[Policy, ValueFunction]:
    """Independent optimality oracle: evaluate every deterministic policy.

    Returns the policy whose value dominates at every state simultaneously
    (one always exists for a finite discounted MDP). Among equally optimal
    policies the first in lexicographic action order wins, matching the
    solver's tie-break.
    """
    counts = [len(model.actions(s)) for s in model.states]
    total = math.prod(counts)
    if total > ENUMERATION_LIMIT:
        raise ValueError(
            f"policy space of size {total} exceeds enumeration limit {ENUMERATION_LIMIT}"
        )
    action_sets = [model.actions(s) for s in model.states]

    best = np.full(len(model.states), -np.inf)
    for combo in itertools.product(*action_sets):
        v = _policy_value(model, combo)
        best = np.maximum(best, v)

    # Second pass: first policy (lexicographic in action order) attaining the
    # componentwise maximum, up to solver round-off.
    tol = 1e-9 * max(1.0, float(np.max(np.abs(best))))
    for combo in itertools.product(*action_sets):
        v = _policy_value(model, combo)
        if np.all(v >= best - tol):
            policy = Policy(dict(zip(model.states, combo)))
            return policy, ValueFunction.from_array(model.states, v)
    raise AssertionError("no policy attains the componentwise optimum")


def _policy_value(model: MdpModel, combo: Sequence[Action]) -> np.ndarray:
    n = len(model.states)
    p_pi = np.empty((n, n))
    r_pi = np.empty(n)
    for i, s in enumerate(model.states):
        p_pi[i] = model.transition_row(s, combo[i])
        r_pi[i] = model.expected_reward(s, combo[i])
    return np.linalg.solve(np.eye(n) - model.discount * p_pi, r_pi)
