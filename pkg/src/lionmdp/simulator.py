"""Slot-level Monte-Carlo simulation of the band environment.

Simulates what the analytic kernel abstracts: M independent ON-OFF primary
chains, m coordinated attackers probing bands without repetition, heavy
receiver traffic, the TCP window, and the defender's stay/hop decisions.
Used to validate the transition kernel and policy values empirically.

Attacker bookkeeping: the attackers keep a set of not-yet-probed bands.
Each slot they probe m of them (all, if fewer remain) and find the
defender iff its band is among the probes. Probed bands stay excluded only
across consecutive successful staying slots; the set refills after a hop
or any non-success slot. After k straight successes the set therefore
holds M - k*m bands and the next probe finds the defender with probability
m / (M - k*m), saturating at 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .mdp import Policy
from .model import (
    HEAVY,
    LION,
    PRIMARY,
    LionAction,
    LionParams,
    LionState,
    admissible_actions,
    primary_occupancy,
)

#: A policy for simulation purposes: either a deterministic table or a
#: callable drawing an action from the slot's RNG stream.
PolicyLike = Policy | Callable[[LionState, np.random.Generator], LionAction]


@dataclass
class EnvState:
    """Full environment state between slots."""

    band_occupied: np.ndarray  # bool flags, one per band
    secondary_band: int
    unsearched_bands: set[int]
    k_counter: int
    logical_state: LionState
    window_size: int
    # Probe-order cache: one uniform permutation per search epoch, consumed
    # block by block. Equivalent in law to sampling each probe separately.
    _probe_queue: np.ndarray | None = field(default=None, repr=False)
    _probe_pos: int = field(default=0, repr=False)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    horizon: int = 1000
    replications: int = 1
    burn_in: int = 0
    confidence: float = 0.95

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"replications must be at least 1, got {self.replications}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    state: str
    action: str
    next_state: str
    reward: float
    window_size: int
    band: int


@dataclass(frozen=True)
class EpisodeResult:
    discounted_return: float
    trace: tuple[SlotRecord, ...]


@dataclass(frozen=True)
class SimResult:
    """Aggregate statistics of one policy's replicated rollouts."""

    name: str
    replications: int
    mean_return: float
    half_width: float
    confidence: float
    mean_window: float
    frequencies: dict[tuple[str, str], dict[str, float]] = field(default_factory=dict)

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean_return - self.half_width, self.mean_return + self.half_width)

    def as_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "replications": self.replications,
            "mean_return": self.mean_return,
            "half_width": self.half_width,
            "confidence": self.confidence,
            "mean_window": self.mean_window,
            "frequencies": {
                f"{state}/{action}": dict(sorted(freqs.items()))
                for (state, action), freqs in sorted(self.frequencies.items())
            },
        }


def episode_rng(seed: int, replication: int) -> np.random.Generator:
    """Derived, independent stream per (seed, replication index)."""
    return np.random.default_rng(np.random.SeedSequence((seed, replication)))


_FULL_SETS: dict[int, frozenset[int]] = {}


def _refill(env: EnvState, M: int) -> None:
    full = _FULL_SETS.get(M)
    if full is None:
        full = frozenset(range(M))
        _FULL_SETS[M] = full
    env.unsearched_bands = set(full)
    env._probe_queue = None


def _remove_probed(env: EnvState, count: int, rng: np.random.Generator) -> None:
    # Probed-and-missed bands never include the defender's own.
    if env._probe_queue is None:
        M = env.band_occupied.size
        if len(env.unsearched_bands) == M:
            idx = np.arange(M)
            candidates = idx[idx != env.secondary_band]
        else:
            pool = env.unsearched_bands - {env.secondary_band}
            candidates = np.fromiter(pool, count=len(pool), dtype=np.int64)
            candidates.sort()
        env._probe_queue = rng.permutation(candidates)
        env._probe_pos = 0
    take = min(count, env._probe_queue.size - env._probe_pos)
    probed = env._probe_queue[env._probe_pos : env._probe_pos + take]
    env._probe_pos += take
    env.unsearched_bands.difference_update(probed.tolist())


def initial_env(params: LionParams, rng: np.random.Generator) -> EnvState:
    """Fresh environment in the first success state.

    Bands start at the stationary occupancy; the defender sits in a
    uniformly chosen free band with one probe round already excluded,
    consistent with being one success deep.
    """
    occ = primary_occupancy(params).occupied
    band_occupied = rng.random(params.M) < occ
    free = np.flatnonzero(~band_occupied)
    if free.size == 0:
        forced = int(rng.integers(params.M))
        band_occupied[forced] = False
        free = np.array([forced])
    secondary = int(free[rng.integers(free.size)])
    env = EnvState(
        band_occupied=band_occupied,
        secondary_band=secondary,
        unsearched_bands=set(range(params.M)),
        k_counter=1,
        logical_state=LionState.success(1),
        window_size=2,
    )
    _remove_probed(env, params.m, rng)
    return env


def env_for_state(params: LionParams, s: LionState, rng: np.random.Generator) -> EnvState:
    """Environment consistent with logical state ``s``.

    Other bands are stationary; the defender's band is forced occupied in P
    and free otherwise. For success states the attackers' search history is
    synthesized: k probe rounds are excluded, leaving max(M - k*m, 1)
    unsearched bands so the next probe hits at the analytic rate.
    """
    occ = primary_occupancy(params).occupied
    band_occupied = rng.random(params.M) < occ
    secondary = int(rng.integers(params.M))
    band_occupied[secondary] = s == PRIMARY
    k = s.k if s.kind == "S" else 1
    env = EnvState(
        band_occupied=band_occupied,
        secondary_band=secondary,
        unsearched_bands=set(range(params.M)),
        k_counter=k,
        logical_state=s,
        window_size=min(2**k, 2**params.K),
    )
    if s.kind == "S":
        target = max(params.M - s.k * params.m, 1)
        _remove_probed(env, params.M - target, rng)
    return env


def step(
    env: EnvState, a: LionAction, params: LionParams, rng: np.random.Generator
) -> tuple[EnvState, LionState, float]:
    """Advance the environment one slot under action ``a`` (in place).

    Event resolution mirrors the analytic kernel's factoring: the band's
    primary occupancy decides first, then heavy traffic, then the attacker
    probe; only otherwise is the slot a success. The TCP window changes
    only under T actions (doubles on success up to 2**K, resets on heavy
    traffic). The emitted reward equals the model's reward function on the
    realized transition.
    """
    s = env.logical_state
    hops = a is LionAction.HT or a is LionAction.HF
    freezes = a is LionAction.SF or a is LionAction.HF
    if freezes != (s.kind in ("P", "L")):
        raise ValueError(f"action {a.value} is not admissible in state {s.label}")
    M, m, K = params.M, params.m, params.K

    if hops:
        # New band drawn uniformly among the others; the move discards the
        # attackers' progress.
        other = int(rng.integers(M - 1))
        env.secondary_band = other if other < env.secondary_band else other + 1
        _refill(env, M)

    u = rng.random(M + 2)
    occupied = env.band_occupied
    env.band_occupied = np.where(occupied, u[:M] >= params.alpha, u[:M] < params.beta)

    r = -params.C_s - (params.C_h if hops else 0.0)
    in_success = s.kind == "S"
    if env.band_occupied[env.secondary_band]:
        nxt = PRIMARY
    elif u[M] < params.lam:
        nxt = HEAVY
        r -= params.C_H
    elif u[M + 1] * len(env.unsearched_bands) < m:
        nxt = LION
        r -= params.C_L
    else:
        nxt = LionState.success(min(s.k + 1, K) if in_success else 1)
        r += params.G
        # Once the counter saturates the attackers' progress is capped too,
        # keeping the hit rate at the truncated kernel's level.
        if not (in_success and s.k == K):
            _remove_probed(env, m, rng)

    if nxt.kind != "S":
        _refill(env, M)
        env.k_counter = 1
    else:
        env.k_counter = nxt.k

    if not freezes:
        if nxt.kind == "S":
            env.window_size = min(env.window_size * 2, 2**K)
        elif nxt is HEAVY:
            env.window_size = 1

    env.logical_state = nxt
    return env, nxt, r


def run_episode(
    params: LionParams,
    pi: PolicyLike,
    cfg: SimConfig,
    replication: int = 0,
    record_trace: bool = True,
) -> EpisodeResult:
    """Roll out one episode from the first success state.

    The return is the discounted sum of slot rewards over the horizon. The
    trace is reproducible byte for byte from (seed, replication, params,
    policy, horizon).
    """
    rng = episode_rng(cfg.seed, replication)
    env = initial_env(params, rng)
    table = pi.actions if isinstance(pi, Policy) else None
    gamma = params.gamma
    total = 0.0
    weight = 1.0
    trace: list[SlotRecord] = []
    for slot in range(cfg.horizon):
        s = env.logical_state
        a = table[s] if table is not None else pi(s, rng)
        _, nxt, r = step(env, a, params, rng)
        total += weight * r
        weight *= gamma
        if record_trace:
            trace.append(
                SlotRecord(
                    slot=slot,
                    state=s.label,
                    action=a.value,
                    next_state=nxt.label,
                    reward=r,
                    window_size=env.window_size,
                    band=env.secondary_band,
                )
            )
    return EpisodeResult(discounted_return=total, trace=tuple(trace))


def simulate_policy(
    params: LionParams,
    pi: PolicyLike,
    cfg: SimConfig,
    name: str = "policy",
    collect_frequencies: bool = False,
) -> SimResult:
    """Replicate episodes and aggregate: mean discounted return with a
    normal-approximation confidence half-width, mean TCP window, and
    (optionally) per-(state, action) next-state frequencies, tallied after
    the burn-in."""
    returns = np.empty(cfg.replications)
    window_total = 0.0
    window_slots = 0
    counts: dict[tuple[str, str], dict[str, int]] = {}
    gamma = params.gamma
    table = pi.actions if isinstance(pi, Policy) else None
    for i in range(cfg.replications):
        rng = episode_rng(cfg.seed, i)
        env = initial_env(params, rng)
        total = 0.0
        weight = 1.0
        for slot in range(cfg.horizon):
            s = env.logical_state
            a = table[s] if table is not None else pi(s, rng)
            _, nxt, r = step(env, a, params, rng)
            total += weight * r
            weight *= gamma
            if slot >= cfg.burn_in:
                window_total += env.window_size
                window_slots += 1
                if collect_frequencies:
                    row = counts.setdefault((s.label, a.value), {})
                    row[nxt.label] = row.get(nxt.label, 0) + 1
        returns[i] = total
    z = statistics.NormalDist().inv_cdf(0.5 + cfg.confidence / 2.0)
    spread = float(returns.std(ddof=1)) if cfg.replications > 1 else 0.0
    freqs = {
        key: {label: c / sum(row.values()) for label, c in row.items()}
        for key, row in counts.items()
    }
    return SimResult(
        name=name,
        replications=cfg.replications,
        mean_return=float(returns.mean()),
        half_width=z * spread / math.sqrt(cfg.replications),
        confidence=cfg.confidence,
        mean_window=window_total / window_slots if window_slots else 0.0,
        frequencies=freqs,
    )


def estimate_transition_frequencies(
    params: LionParams, s: LionState, a: LionAction, n: int, seed: int = 0
) -> dict[LionState, float]:
    """Empirical one-step next-state distribution from state ``s``.

    Each sample rebuilds an environment consistent with ``s`` and applies
    one step; the tallies estimate the analytic kernel row.
    """
    if n < 1:
        raise ValueError(f"sample count must be at least 1, got {n}")
    if a not in admissible_actions(s):
        raise ValueError(f"action {a.value} is not admissible in state {s.label}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    counts: dict[LionState, int] = {}
    for _ in range(n):
        env = env_for_state(params, s, rng)
        _, nxt, _ = step(env, a, params, rng)
        counts[nxt] = counts.get(nxt, 0) + 1
    return {state: c / n for state, c in counts.items()}


def always_stay_policy(K: int) -> Policy:
    return Policy({s: admissible_actions(s)[0] for s in _all_states(K)})


def always_hop_policy(K: int) -> Policy:
    return Policy({s: admissible_actions(s)[1] for s in _all_states(K)})


def uniform_random_policy(s: LionState, rng: np.random.Generator) -> LionAction:
    choices = admissible_actions(s)
    return choices[int(rng.integers(len(choices)))]


def _all_states(K: int) -> tuple[LionState, ...]:
    return tuple(LionState.success(k) for k in range(1, K + 1)) + (PRIMARY, LION, HEAVY)


def compare_policies(
    params: LionParams, policies: Mapping[str, PolicyLike], cfg: SimConfig
) -> list[SimResult]:
    """Simulate every policy under common random numbers and rank by mean
    discounted return (best first). Replication i of every policy consumes
    the same derived stream, so identical policies score identically."""
    results = [
        simulate_policy(params, pi, cfg, name=name) for name, pi in policies.items()
    ]
    results.sort(key=lambda res: -res.mean_return)
    return results


def trace_to_csv(trace: Sequence[SlotRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["slot", "state", "action", "next_state", "reward", "window_size", "band"])
    for rec in trace:
        writer.writerow(
            [rec.slot, rec.state, rec.action, rec.next_state, repr(rec.reward),
             rec.window_size, rec.band]
        )
    return buf.getvalue()


def summary_to_json(results: Sequence[SimResult]) -> str:
    return json.dumps([res.as_dict() for res in results], indent=2, sort_keys=True)
