"""Traffic scenarios: who sends what to whom, rate floors, power fractions.

The message matrix is indexed ``msg[n][k]`` = 1 when LC k has a message for
LC n. A broadcast/multicast transmitter (bcast[k] = 1) emits one physical
signal shared by all its recipients, so it owns a single power coefficient;
a unicast transmitter owns one coefficient per destination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple


class NoMessagesError(ValueError):
    """Scenario carries no messages at all."""


@dataclass(frozen=True)
class SicConfig:
    """Residual power fraction left behind by imperfect cancellation."""

    zeta: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must lie in [0, 1]")


class Message(NamedTuple):
    """One physical transmission: source LC and its recipient set."""

    tx: int
    recipients: tuple[int, ...]

    @property
    def is_shared(self) -> bool:
        return len(self.recipients) > 1


@dataclass(frozen=True)
class Scenario:
    """Message matrix M, broadcast indicator vector b, rate floors (bps/Hz)."""

    msg: tuple[tuple[int, ...], ...]
    bcast: tuple[int, ...]
    r_min: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.msg)
        if len(self.bcast) != n or len(self.r_min) != n:
            raise ValueError("matrix/vector sizes disagree")
        for row in self.msg:
            if len(row) != n or any(v not in (0, 1) for v in row):
                raise ValueError("msg must be a square binary matrix")
        for i in range(n):
            if self.msg[i][i] != 0:
                raise ValueError("no LC messages itself: diagonal must be zero")
        for row in self.r_min:
            if len(row) != n or any(v < 0 for v in row):
                raise ValueError("rate floors must be non-negative")
        if any(b not in (0, 1) for b in self.bcast):
            raise ValueError("bcast must be binary")

    @property
    def n_lc(self) -> int:
        return len(self.msg)

    def recipients_of(self, k: int) -> tuple[int, ...]:
        return tuple(n for n in range(self.n_lc) if self.msg[n][k])

    @cached_property
    def messages(self) -> tuple[Message, ...]:
        """Distinct physical messages in canonical (tx, first-recipient) order.

        The canonical order doubles as the SIC tie-break order: among equal
        received powers, the lower-indexed message is decoded first.
        """
        out: list[Message] = []
        for k in range(self.n_lc):
            recips = self.recipients_of(k)
            if not recips:
                continue
            if self.bcast[k]:
                out.append(Message(tx=k, recipients=recips))
            else:
                out.extend(Message(tx=k, recipients=(n,)) for n in recips)
        out.sort(key=lambda m: (m.tx, m.recipients[0]))
        return tuple(out)

    @cached_property
    def n_messages(self) -> int:
        return len(self.messages)

    def transmitting_lcs(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.n_lc) if any(self.msg[n][k] for n in range(self.n_lc)))

    def receiving_lcs(self) -> tuple[int, ...]:
        return tuple(n for n in range(self.n_lc) if any(self.msg[n]))


class BandwidthFactors(NamedTuple):
    """Reciprocal resource-block counts: (f_O, f_U, f_D)."""

    f_oma: float
    f_um: float
    f_dm: float


def bandwidth_factors(scenario: Scenario) -> BandwidthFactors:
    """Per-scheme bandwidth normalization.

    Orthogonal access spends one block per distinct physical message,
    uplink-style access one block per receiving LC, downlink-style access one
    block per transmitting LC. The combined scheme needs a single block and
    no factor.
    """
    n_msgs = scenario.n_messages
    if n_msgs == 0:
        raise NoMessagesError("scenario has no messages")
    return BandwidthFactors(
        f_oma=1.0 / n_msgs,
        f_um=1.0 / len(scenario.receiving_lcs()),
        f_dm=1.0 / len(scenario.transmitting_lcs()),
    )


@dataclass(frozen=True)
class PaMatrix:
    """Power fractions alpha[n][k] of the total budget for message x_{n,k}.

    One unit of power is split across distinct physical transmissions, so a
    shared (broadcast/multicast) coefficient counts once even though it
    appears on every recipient row.
    """

    alpha: tuple[tuple[float, ...], ...]

    def validate(self, scenario: Scenario, tol: float = 1e-9) -> None:
        n = scenario.n_lc
        if len(self.alpha) != n or any(len(row) != n for row in self.alpha):
            raise ValueError("alpha shape must match the scenario")
        for i in range(n):
            for k in range(n):
                a = self.alpha[i][k]
                if a < 0:
                    raise ValueError("power fractions must be non-negative")
                if scenario.msg[i][k] == 0 and a != 0:
                    raise ValueError("power assigned to a non-existent message")
        for m in scenario.messages:
            vals = {self.alpha[n_][m.tx] for n_ in m.recipients}
            if len(vals) > 1:
                raise ValueError("shared messages need equal fractions per recipient")
        total = sum(self.fraction_of(m) for m in scenario.messages)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=tol):
            raise ValueError(f"physical power fractions sum to {total}, expected 1")

    def fraction_of(self, message: Message) -> float:
        return self.alpha[message.recipients[0]][message.tx]

    @classmethod
    def from_message_fractions(cls, scenario: Scenario,
                               fractions: list[float] | tuple[float, ...]) -> "PaMatrix":
        """Expand one fraction per physical message into the full matrix."""
        if len(fractions) != scenario.n_messages:
            raise ValueError("one fraction per physical message required")
        n = scenario.n_lc
        alpha = [[0.0] * n for _ in range(n)]
        for frac, m in zip(fractions, scenario.messages):
            for rx in m.recipients:
                alpha[rx][m.tx] = float(frac)
        return cls(alpha=tuple(tuple(row) for row in alpha))

    def message_fractions(self, scenario: Scenario) -> tuple[float, ...]:
        return tuple(self.fraction_of(m) for m in scenario.messages)
