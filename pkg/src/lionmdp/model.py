"""Defense model for Lion attacks on a cognitive radio link.

A secondary user opportunistically uses one of M licensed bands whose
primary users follow independent two-state ON-OFF chains. m coordinated
attackers probe bands each slot trying to locate the secondary user and
kill its TCP acknowledgements; the receiver may also stall with heavy
traffic. Each slot the defender picks a physical action (stay in band or
hop) and a transport action (normal TCP window handling or a window
freeze). This module builds the resulting finite MDP.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Mapping
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

from .mdp import MdpModel


class LionAction(enum.Enum):
    """Joint physical/transport action.

    First letter: Stay or Hop. Second: TCP window rule (double on success,
    shrink on receiver congestion) or Freeze (hold the window). Enum order
    is the tie-break order for the solver.
    """

    ST = "ST"
    HT = "HT"
    SF = "SF"
    HF = "HF"

    @property
    def hops(self) -> bool:
        return self in (LionAction.HT, LionAction.HF)

    @property
    def freezes(self) -> bool:
        return self in (LionAction.SF, LionAction.HF)

    @property
    def physical(self) -> str:
        return "Hopping" if self.hops else "Staying"

    @property
    def transport(self) -> str:
        return "Freezing" if self.freezes else "TCP"


@dataclass(frozen=True)
class LionState:
    """Band status seen by the secondary user at the end of a slot.

    kind "P": primary user present in the band.
    kind "L": attackers found the band and are disrupting ACKs.
    kind "H": transmission failed due to heavy receiver traffic.
    kind "S": successful slot, with k counting consecutive successes.
    """

    kind: str
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("P", "L", "H", "S"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind == "S" and self.k < 1:
            raise ValueError(f"success counter must be at least 1, got {self.k}")
        if self.kind != "S" and self.k != 0:
            raise ValueError(f"state {self.kind!r} carries no success counter")

    @property
    def label(self) -> str:
        return f"S{self.k}" if self.kind == "S" else self.kind

    @classmethod
    def success(cls, k: int) -> "LionState":
        state = _SUCCESS_CACHE.get(k)
        if state is None:
            state = cls("S", k)
            _SUCCESS_CACHE[k] = state
        return state

    @classmethod
    def parse(cls, label: str) -> "LionState":
        if label in ("P", "L", "H"):
            return cls(label)
        if label.startswith("S"):
            return cls.success(int(label[1:]))
        raise ValueError(f"unknown state label {label!r}")


_SUCCESS_CACHE: dict[int, LionState] = {}

PRIMARY = LionState("P")
LION = LionState("L")
HEAVY = LionState("H")

CONFIG_KEYS = ("alpha", "beta", "lambda", "m", "M", "C_s", "C_h", "C_L", "C_H", "G", "K", "gamma")


@dataclass(frozen=True)
class LionParams:
    """Model constants.

    alpha / beta are the per-slot ON->OFF / OFF->ON probabilities of each
    band's primary chain, lam the per-slot heavy-traffic probability at the
    receiver, m the number of coordinated attackers, M the number of bands.
    Costs: C_s sensing per slot, C_h per hop, C_L loss when attacked, C_H
    loss under heavy traffic; G is the gain of a successful slot. K
    truncates the consecutive-success counter and gamma discounts future
    slots.
    """

    alpha: float = 0.5
    beta: float = 0.5
    lam: float = 0.1
    m: int = 20
    M: int = 100
    C_s: float = 2.0
    C_h: float = 2.0
    C_L: float = 10.0
    C_H: float = 20.0
    G: float = 50.0
    K: int = 10
    gamma: float = 0.9

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid parameters: " + "; ".join(problems))

    def violations(self) -> list[str]:
        """All violated constraints, empty when the parameters are valid."""
        out = []
        for name in ("alpha", "beta", "lam"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name} must be in [0, 1], got {v}")
        if self.alpha + self.beta <= 0.0:
            out.append(f"alpha + beta must be positive, got {self.alpha + self.beta}")
        if not 1 <= self.m <= self.M:
            out.append(f"m must satisfy 1 <= m <= M, got m={self.m}, M={self.M}")
        if self.K < 1:
            out.append(f"K must be at least 1, got {self.K}")
        if not 0.0 <= self.gamma < 1.0:
            out.append(f"gamma must be in [0, 1), got {self.gamma}")
        for name in ("C_s", "C_h", "C_L", "C_H", "G"):
            v = getattr(self, name)
            if v < 0.0:
                out.append(f"{name} must be nonnegative, got {v}")
        return out

    @classmethod
    def from_mapping(cls, raw: Mapping[str, object]) -> "LionParams":
        """Build from a flat key-value config; keys follow ``CONFIG_KEYS``."""
        known = {f.name for f in fields(cls)}
        kwargs = {}
        unknown = []
        for key, value in raw.items():
            name = "lam" if key == "lambda" else key
            if name not in known:
                unknown.append(key)
                continue
            kwargs[name] = int(value) if name in ("m", "M", "K") else float(value)
        if unknown:
            raise ValueError("unknown parameter keys: " + ", ".join(sorted(unknown)))
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for key in CONFIG_KEYS:
            name = "lam" if key == "lambda" else key
            out[key] = getattr(self, name)
        return out

    def replace(self, **changes) -> "LionParams":
        return replace(self, **changes)


class BandOccupancy(NamedTuple):
    occupied: float
    idle: float


def primary_occupancy(params: LionParams) -> BandOccupancy:
    """Stationary probabilities that a band is occupied / idle.

    The ON-OFF chain with ON->OFF probability alpha and OFF->ON probability
    beta is occupied a fraction beta / (alpha + beta) of the time.
    """
    total = params.alpha + params.beta
    return BandOccupancy(occupied=params.beta / total, idle=params.alpha / total)


def lion_attack_probability(k: int, params: LionParams) -> float:
    """Chance the coordinated attackers find the band after k straight
    successful staying slots.

    Each prior slot excluded m bands from their search, so the k-th probe
    draws m of the M - k*m still-unsearched bands. Once fewer than a full
    probe's worth would remain, discovery is certain.
    """
    if k < 1:
        raise ValueError(f"success counter must be at least 1, got {k}")
    m, M = params.m, params.M
    if k < M / m - 1:
        return m / (M - k * m)
    return 1.0


def admissible_actions(s: LionState) -> tuple[LionAction, ...]:
    """Freezing is the transport response while the band is unusable (P, L);
    the TCP window rule applies while transmitting (success states, H)."""
    if s.kind in ("S", "H"):
        return (LionAction.ST, LionAction.HT)
    return (LionAction.SF, LionAction.HF)


def transition_distribution(
    s: LionState, a: LionAction, params: LionParams
) -> dict[LionState, float]:
    """One-slot transition distribution for an admissible (state, action).

    Staying conditions on the current band (occupied iff in P); hopping
    lands on a band occupied with the stationary probability. Given a free
    band, heavy traffic preempts the attack check, and the attack
    probability is f_L(k) when k successes deep in the same band and m/M
    otherwise. The remaining mass is the successful slot.
    """
    if a not in admissible_actions(s):
        raise ValueError(f"action {a.value} is not admissible in state {s.label}")
    alpha, beta, lam = params.alpha, params.beta, params.lam
    ratio = params.m / params.M

    if s.kind == "S":
        hit = ratio if a.hops else lion_attack_probability(s.k, params)
        success_next = LionState.success(min(s.k + 1, params.K))
    else:
        hit = ratio
        success_next = LionState.success(1)

    if a.hops:
        p_occ = primary_occupancy(params).occupied
    elif s.kind == "P":
        p_occ = 1.0 - alpha
    else:
        p_occ = beta

    p_heavy = (1.0 - p_occ) * lam
    p_lion = (1.0 - p_occ) * (1.0 - lam) * hit
    # The remainder is nonnegative up to rounding; clamp absorbs the few
    # ulps lost when the attack probability saturates at 1.
    p_success = max(0.0, 1.0 - p_occ - p_heavy - p_lion)
    return {PRIMARY: p_occ, HEAVY: p_heavy, LION: p_lion, success_next: p_success}


def reward(s: LionState, a: LionAction, s_next: LionState, params: LionParams) -> float:
    """Slot reward for the realized transition.

    Sensing always costs C_s, hopping adds C_h; the outcome then adds the
    success gain G or the attack / heavy-traffic losses C_L / C_H.
    """
    if a not in admissible_actions(s):
        raise ValueError(f"action {a.value} is not admissible in state {s.label}")
    r = -params.C_s
    if a.hops:
        r -= params.C_h
    if s_next.kind == "S":
        r += params.G
    elif s_next.kind == "L":
        r -= params.C_L
    elif s_next.kind == "H":
        r -= params.C_H
    return r


def lion_states(K: int) -> tuple[LionState, ...]:
    """Model state set: K success levels plus P, L, H."""
    return tuple(LionState.success(k) for k in range(1, K + 1)) + (PRIMARY, LION, HEAVY)


def build_mdp(params: LionParams) -> MdpModel:
    """Assemble the defense MDP for the given parameters.

    The success counter is truncated at K with a self-loop (the per-slot
    rewards and, once the attack probability saturates, the dynamics no
    longer depend on k). Parameters are validated at construction.
    """
    states = lion_states(params.K)
    return MdpModel(
        states=states,
        actions={s: admissible_actions(s) for s in states},
        transition=lambda s, a: transition_distribution(s, a, params),
        reward=lambda s, a, s2: reward(s, a, s2, params),
        discount=params.gamma,
    )


def model_as_dict(params: LionParams) -> dict:
    """JSON-ready dump of the assembled model (states, rows, rewards)."""
    model = build_mdp(params)
    rows = []
    for s in model.states:
        for a in model.actions(s):
            trans = model.transition(s, a)
            rows.append(
                {
                    "state": s.label,
                    "action": a.value,
                    "transitions": {t.label: p for t, p in trans.items()},
                    "rewards": {t.label: model.reward(s, a, t) for t in trans},
                }
            )
    return {
        "parameters": params.to_mapping(),
        "states": [s.label for s in model.states],
        "discount": model.discount,
        "rows": rows,
    }


def model_to_json(params: LionParams, indent: int = 2) -> str:
    return json.dumps(model_as_dict(params), indent=indent, sort_keys=True)
