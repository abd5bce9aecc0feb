"""Distributed super-cluster formation protocol, simulated event by event.

Cluster heads that do not yet belong to a super cluster periodically
broadcast invitations carrying a proposed resource block. A head hearing an
invitation answers with an acceptance only while outside any SC and only
when driving behind the inviter; an inviter that itself accepts someone
else's invitation abandons its own round. At the end of its collection
window an inviter still in charge picks the nearest accepting heads up to
the size limit, re-draws its resource block if an acceptance revealed a
clash, and broadcasts the confirmation that binds the members.

Control messaging is abstracted as reliable in-range delivery with a small
uniform random latency; everything is driven by one seeded generator, so a
run is a pure function of (agents, config, seed).
"""

from __future__ import annotations

import csv
import heapq
import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class AgentState(Enum):
    UNCLUSTERED = "unclustered"
    INVITING = "inviting"
    AWAITING_CONFIRM = "awaiting-confirm"
    SC_MEMBER = "sc-member"
    SC_HEAD = "sc-head"


class NoRbAvailableError(RuntimeError):
    """Every resource block looks reserved from this agent's viewpoint."""


@dataclass(frozen=True)
class ScfpConfig:
    sc_size_limit: int = 4
    invite_period_s: float = 1.0
    rb_reservation_timeout_s: float = 5.0
    comm_range_m: float = 300.0
    rb_pool_size: int = 16
    seed: int = 0
    # CSMA-CA abstraction: delivery latency ~ U(0, latency_fraction * period)
    latency_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.sc_size_limit < 2:
            raise ValueError("super clusters need at least two members")
        if min(self.invite_period_s, self.rb_reservation_timeout_s) <= 0:
            raise ValueError("protocol timers must be positive")
        if self.rb_pool_size < 1:
            raise ValueError("need at least one resource block")


@dataclass(frozen=True)
class ScfpMessage:
    kind: str  # "SC-INV-MSG" | "SC-ACP-MSG" | "SC-CON-MSG"
    sender: int
    proposed_rb: int | None = None            # INV
    nch_locations: tuple[tuple[float, float], ...] = ()   # ACP
    available_rbs: tuple[int, ...] = ()       # ACP
    target: int | None = None                 # ACP: the inviter it answers
    members: tuple[int, ...] = ()             # CON
    chs_pa_payload: str = ""                  # CON, opaque
    final_rb: int | None = None               # CON


@dataclass
class ChAgent:
    """One cluster head participating in formation."""

    id: int
    x_m: float
    y_m: float
    state: AgentState = AgentState.UNCLUSTERED
    current_rb: int | None = None
    sc_id: int | None = None
    known_reserved_rbs: dict[int, float] = field(default_factory=dict)
    acceptances: list[ScfpMessage] = field(default_factory=list)
    pledged_to: int | None = None
    pledge_time_s: float = -math.inf
    nch_locations: tuple[tuple[float, float], ...] = ()

    def in_sc(self) -> bool:
        return self.state in (AgentState.SC_MEMBER, AgentState.SC_HEAD)

    def reserved_now(self, now: float) -> set[int]:
        return {rb for rb, expiry in self.known_reserved_rbs.items() if expiry > now}

    def note_reserved(self, rb: int, now: float, timeout: float) -> None:
        expiry = now + timeout
        if self.known_reserved_rbs.get(rb, -math.inf) < expiry:
            self.known_reserved_rbs[rb] = expiry


@dataclass(frozen=True)
class TraceEvent:
    time_s: float
    kind: str
    sender: int
    receiver: int  # -1 for broadcasts / state changes
    detail: str


@dataclass(frozen=True)
class FormationResult:
    agents: tuple[ChAgent, ...]
    trace: tuple[TraceEvent, ...]

    def sc_members(self) -> dict[int, tuple[int, ...]]:
        """Super clusters keyed by head id, members including the head."""
        out: dict[int, list[int]] = {}
        for a in self.agents:
            if a.state is AgentState.SC_HEAD:
                out.setdefault(a.id, []).insert(0, a.id)
        for a in self.agents:
            if a.state is AgentState.SC_MEMBER and a.sc_id in out:
                out[a.sc_id].append(a.id)
        return {head: tuple(ids) for head, ids in out.items()}

    def rb_of(self, sc_head: int) -> int | None:
        for a in self.agents:
            if a.id == sc_head:
                return a.current_rb
        return None


def agent_distance(a: ChAgent, b: ChAgent) -> float:
    return math.hypot(a.x_m - b.x_m, a.y_m - b.y_m)


def select_rb(agent: ChAgent, now: float, config: ScfpConfig,
              rng: np.random.Generator) -> int:
    """Uniform pick among blocks the agent believes free right now."""
    free = sorted(set(range(config.rb_pool_size)) - agent.reserved_now(now))
    if not free:
        raise NoRbAvailableError(f"agent {agent.id}: no free resource block")
    return int(free[rng.integers(len(free))])


def on_invite(agent: ChAgent, msg: ScfpMessage, inviter_x: float,
              now: float, config: ScfpConfig) -> ScfpMessage | None:
    """Acceptance decision for a received invitation.

    Only heads outside any SC answer, and only from behind the inviter
    (travel is toward +x, so behind means a strictly smaller x). The
    advertised free blocks are snapshotted before booking the inviter's own
    proposal, so an otherwise clean pool does not read as a clash.
    """
    accepts = not agent.in_sc() and agent.x_m < inviter_x
    available = tuple(sorted(set(range(config.rb_pool_size)) - agent.reserved_now(now)))
    agent.note_reserved(msg.proposed_rb, now, config.rb_reservation_timeout_s)
    if not accepts:
        return None
    agent.state = AgentState.AWAITING_CONFIRM
    agent.current_rb = msg.proposed_rb
    agent.pledged_to = msg.sender
    agent.pledge_time_s = now
    return ScfpMessage(
        kind="SC-ACP-MSG",
        sender=agent.id,
        target=msg.sender,
        nch_locations=agent.nch_locations,
        available_rbs=available,
    )


def select_members(inviter: ChAgent, acceptances: list[ScfpMessage],
                   positions: dict[int, tuple[float, float]],
                   limit: int) -> tuple[int, ...]:
    """Nearest accepting heads, at most limit-1, ties by lower agent id."""
    ranked = sorted(
        {acp.sender for acp in acceptances},
        key=lambda aid: (math.hypot(positions[aid][0] - inviter.x_m,
                                    positions[aid][1] - inviter.y_m), aid),
    )
    return tuple(ranked[:limit - 1])


def on_acceptances(inviter: ChAgent, acceptances: list[ScfpMessage],
                   positions: dict[int, tuple[float, float]], now: float,
                   config: ScfpConfig, rng: np.random.Generator,
                   payload: str = "") -> ScfpMessage:
    """Close the collection window: pick members, settle the RB, confirm."""
    if not acceptances:
        raise ValueError("confirmation requires at least one acceptance")
    rb = inviter.current_rb
    clash = any(rb not in acp.available_rbs for acp in acceptances)
    if clash:
        inviter.note_reserved(rb, now, config.rb_reservation_timeout_s)
        rb = select_rb(inviter, now, config, rng)
    members = select_members(inviter, acceptances, positions, config.sc_size_limit)
    inviter.state = AgentState.SC_HEAD
    inviter.sc_id = inviter.id
    inviter.current_rb = rb
    return ScfpMessage(kind="SC-CON-MSG", sender=inviter.id, members=members,
                       final_rb=rb, chs_pa_payload=payload)


class _Sim:
    """Single simulation run; agents are mutated in place."""

    def __init__(self, agents: list[ChAgent], config: ScfpConfig):
        self.agents = {a.id: a for a in agents}
        self.order = sorted(self.agents)
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.queue: list[tuple[float, int, int, str, ScfpMessage | None]] = []
        self.seq = itertools.count()
        self.trace: list[TraceEvent] = []
        self.positions = {a.id: (a.x_m, a.y_m) for a in agents}

    def schedule(self, t: float, agent_id: int, kind: str,
                 msg: ScfpMessage | None = None) -> None:
        heapq.heappush(self.queue, (t, next(self.seq), agent_id, kind, msg))

    def log(self, t: float, kind: str, sender: int, receiver: int, detail: str) -> None:
        self.trace.append(TraceEvent(t, kind, sender, receiver, detail))

    def broadcast(self, t: float, sender: ChAgent, msg: ScfpMessage) -> None:
        self.log(t, f"send-{msg.kind}", sender.id, -1, _describe(msg))
        # recipients in id order so latency draws are reproducible
        for aid in self.order:
            other = self.agents[aid]
            if aid == sender.id or agent_distance(sender, other) > self.config.comm_range_m:
                continue
            latency = self.rng.uniform(0.0, self.config.latency_fraction
                                       * self.config.invite_period_s)
            self.schedule(t + latency, aid, "deliver", msg)

    def run(self, duration_s: float) -> FormationResult:
        for aid in self.order:
            self.schedule(0.0, aid, "tick", None)
        while self.queue:
            t, _, aid, kind, msg = heapq.heappop(self.queue)
            if t > duration_s:
                break
            if kind == "tick":
                self.on_tick(t, self.agents[aid])
            else:
                self.on_deliver(t, self.agents[aid], msg)
        final = tuple(_copy_agent(self.agents[aid]) for aid in self.order)
        return FormationResult(agents=final, trace=tuple(self.trace))

    def on_tick(self, t: float, agent: ChAgent) -> None:
        cfg = self.config
        # stale pledge: the confirmation never came, resume inviting
        if (agent.state is AgentState.AWAITING_CONFIRM
                and t - agent.pledge_time_s >= cfg.invite_period_s):
            agent.state = AgentState.UNCLUSTERED
            agent.pledged_to = None
            agent.current_rb = None
            self.log(t, "state", agent.id, -1, "pledge-expired")
        if agent.state is AgentState.INVITING:
            self.close_window(t, agent)
        if agent.state is AgentState.UNCLUSTERED:
            self.send_invite(t, agent)
        if not agent.in_sc():
            self.schedule(t + cfg.invite_period_s, agent.id, "tick", None)

    def send_invite(self, t: float, agent: ChAgent) -> None:
        try:
            rb = select_rb(agent, t, self.config, self.rng)
        except NoRbAvailableError:
            self.log(t, "state", agent.id, -1, "no-rb-available")
            return
        agent.state = AgentState.INVITING
        agent.current_rb = rb
        agent.acceptances.clear()
        self.broadcast(t, agent, ScfpMessage(kind="SC-INV-MSG", sender=agent.id,
                                             proposed_rb=rb))

    def close_window(self, t: float, agent: ChAgent) -> None:
        if not agent.acceptances:
            agent.state = AgentState.UNCLUSTERED
            return
        try:
            con = on_acceptances(agent, agent.acceptances, self.positions, t,
                                 self.config, self.rng,
                                 payload=f"chs-pa:{agent.id}")
        except NoRbAvailableError:
            self.log(t, "state", agent.id, -1, "formation-aborted-no-rb")
            agent.acceptances.clear()
            agent.state = AgentState.UNCLUSTERED
            return
        self.log(t, "state", agent.id, -1, "sc-head")
        self.broadcast(t, agent, con)

    def on_deliver(self, t: float, agent: ChAgent, msg: ScfpMessage) -> None:
        cfg = self.config
        self.log(t, f"recv-{msg.kind}", msg.sender, agent.id, _describe(msg))
        if msg.kind == "SC-INV-MSG":
            was_inviting = agent.state is AgentState.INVITING
            acp = on_invite(agent, msg, self.positions[msg.sender][0], t, cfg)
            if acp is not None:
                if was_inviting:
                    self.log(t, "state", agent.id, -1, "abandoned-own-round")
                    agent.acceptances.clear()
                self.broadcast(t, agent, acp)
        elif msg.kind == "SC-ACP-MSG":
            for rb in set(range(cfg.rb_pool_size)) - set(msg.available_rbs):
                agent.note_reserved(rb, t, cfg.rb_reservation_timeout_s)
            if msg.target == agent.id and agent.state is AgentState.INVITING:
                agent.acceptances.append(msg)
        elif msg.kind == "SC-CON-MSG":
            agent.note_reserved(msg.final_rb, t, cfg.rb_reservation_timeout_s)
            if agent.in_sc():
                return
            if agent.id in msg.members:
                agent.state = AgentState.SC_MEMBER
                agent.sc_id = msg.sender
                agent.current_rb = msg.final_rb
                agent.pledged_to = None
                self.log(t, "state", agent.id, -1, f"sc-member-of-{msg.sender}")
            elif agent.pledged_to == msg.sender:
                agent.state = AgentState.UNCLUSTERED
                agent.pledged_to = None
                agent.current_rb = None
                self.log(t, "state", agent.id, -1, "not-selected")


def _describe(msg: ScfpMessage) -> str:
    if msg.kind == "SC-INV-MSG":
        return f"rb={msg.proposed_rb}"
    if msg.kind == "SC-ACP-MSG":
        return f"to={msg.target} free={len(msg.available_rbs)}"
    return f"members={','.join(map(str, msg.members))} rb={msg.final_rb}"


def _copy_agent(agent: ChAgent) -> ChAgent:
    clone = replace(agent)
    clone.known_reserved_rbs = dict(agent.known_reserved_rbs)
    clone.acceptances = list(agent.acceptances)
    return clone


def run_formation(agents: list[ChAgent], config: ScfpConfig,
                  duration_s: float) -> FormationResult:
    """Simulate the protocol for a fixed duration and return final states
    plus the full message trace. Deterministic per (agents, config, seed)."""
    if len(agents) < 2:
        raise ValueError("formation needs at least two heads")
    if len({a.id for a in agents}) != len(agents):
        raise ValueError("agent ids must be unique")
    working = [_copy_agent(a) for a in agents]
    return _Sim(working, config).run(duration_s)


def write_trace_csv(result: FormationResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "event", "sender", "receiver", "detail"])
        for ev in result.trace:
            writer.writerow([f"{ev.time_s:.6f}", ev.kind, ev.sender, ev.receiver,
                             ev.detail])


def write_assignment_csv(result: FormationResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "state", "sc_id", "rb"])
        for a in result.agents:
            writer.writerow([a.id, a.state.value,
                             "" if a.sc_id is None else a.sc_id,
                             "" if a.current_rb is None else a.current_rb])
