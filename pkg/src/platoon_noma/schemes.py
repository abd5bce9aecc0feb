"""Per-message SINRs, selection combining and network sum rate.

Four multiple-access flavours share one receiver model. A non-head member of
the destination LC decodes its message with successive interference
cancellation: received components stronger than the wanted one are decoded
first and subtracted (leaving a zeta fraction behind), weaker ones remain as
interference. The per-LC SINR is the best member's SINR, and the network sum
rate weighs shared messages by the reciprocal of their recipient count.

This module is the plain readable path, computed link by link; the solvers
use the vectorized twin in ``_kernel`` which is cross-checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Sequence

import numpy as np

from .channel import ChannelMatrix, PowerConfig
from .scenario import (
    BandwidthFactors,
    Message,
    PaMatrix,
    Scenario,
    SicConfig,
    bandwidth_factors,
)
from .topology import ChSelection, ScTopology

SCHEMES = ("oma", "dm", "um", "udm")


class InfeasibleChsError(ValueError):
    """The selection leaves some receiving LC without a non-head member."""


def sic_sinr(powers: Sequence[float], intended: int, noise_power: float,
             zeta: float = 0.0, factor: float = 1.0) -> float:
    """SINR of one component under SIC decoding.

    ``powers`` lists the received component powers in tie-break order: among
    equal powers the earlier entry is decoded first. Components decoded
    before the intended one contribute ``zeta`` times their power (residual
    cancellation error), later ones contribute fully. The bandwidth factor
    scales the whole denominator.
    """
    if not 0 < factor <= 1:
        raise ValueError("bandwidth factor must lie in (0, 1]")
    if any(p < 0 for p in powers):
        raise ValueError("received powers must be non-negative")
    order = sorted(range(len(powers)), key=lambda i: (-powers[i], i))
    v = order.index(intended)
    stronger = sum(powers[i] for i in order[:v])
    weaker = sum(powers[i] for i in order[v + 1:])
    return powers[intended] / (factor * (noise_power + weaker + zeta * stronger))


@dataclass(frozen=True)
class RateReport:
    """Outcome of one scheme on one channel realization."""

    sinr: np.ndarray
    rates: np.ndarray
    factor: float
    sum_rate: float
    slack: np.ndarray
    feasible: bool

    def message_rate(self, rx: int, tx: int) -> float:
        return float(self.rates[rx, tx])


def sum_rate(per_message_rates: np.ndarray, scenario: Scenario,
             factor: float) -> float:
    """Network sum rate: shared messages count their average recipient rate."""
    total = 0.0
    for k in range(scenario.n_lc):
        recips = scenario.recipients_of(k)
        if not recips:
            continue
        for n in recips:
            r = float(per_message_rates[n][k])
            total += r / len(recips) if scenario.bcast[k] else r
    return factor * total


def receiver_members(topology: ScTopology, chs: ChSelection,
                     scenario: Scenario) -> list[list[int]]:
    """Non-head member indices per LC; receiving LCs must have at least one."""
    chs.validate(topology)
    out = []
    for lc in range(topology.n_lc):
        members = [m for m in range(topology.clusters[lc].size)
                   if m != chs.ch_index_per_lc[lc]]
        if not members and lc in scenario.receiving_lcs():
            raise InfeasibleChsError(f"LC {lc} must receive but has no non-head member")
        out.append(members)
    return out


def _member_gain(channel: ChannelMatrix, chs: ChSelection,
                 rx_lc: int, rx_member: int, tx_lc: int) -> float:
    ch_member = chs.ch_index_per_lc[tx_lc]
    h = channel.gain((tx_lc, ch_member), (rx_lc, rx_member))
    return abs(h) ** 2


def _sigma_messages(scenario: Scenario, scheme: str, rx_lc: int) -> list[list[int]]:
    """Component groups decoded jointly at a member of ``rx_lc``.

    Each group is one SIC pass: the message indices sharing a resource block
    as seen by that receiver, in canonical tie-break order.
    """
    msgs = scenario.messages
    if scheme == "oma":
        return [[j] for j, m in enumerate(msgs) if rx_lc in m.recipients]
    if scheme == "dm":
        groups = []
        for k in sorted({m.tx for m in msgs}):
            if k == rx_lc:
                continue
            groups.append([j for j, m in enumerate(msgs) if m.tx == k])
        return groups
    if scheme == "um":
        return [[j for j, m in enumerate(msgs) if rx_lc in m.recipients]]
    if scheme == "udm":
        return [[j for j, m in enumerate(msgs) if m.tx != rx_lc]]
    raise ValueError(f"unknown scheme {scheme!r}")


def scheme_bandwidth_factor(scenario: Scenario, scheme: str) -> float:
    factors = bandwidth_factors(scenario)
    return {"oma": factors.f_oma, "dm": factors.f_dm,
            "um": factors.f_um, "udm": 1.0}[scheme]


def _rates(scheme: str, channel: ChannelMatrix, topology: ScTopology,
           chs: ChSelection, scenario: Scenario, pa: PaMatrix,
           power: PowerConfig, sic: SicConfig) -> RateReport:
    pa.validate(scenario)
    receivers = receiver_members(topology, chs, scenario)
    factor = scheme_bandwidth_factor(scenario, scheme)
    msgs = scenario.messages
    n = scenario.n_lc
    sinr = np.zeros((n, n))
    for rx_lc in range(n):
        groups = _sigma_messages(scenario, scheme, rx_lc)
        for member in receivers[rx_lc]:
            for group in groups:
                powers = [pa.fraction_of(msgs[j]) * power.p_max
                          * _member_gain(channel, chs, rx_lc, member, msgs[j].tx)
                          for j in group]
                for pos, j in enumerate(group):
                    if rx_lc not in msgs[j].recipients:
                        continue
                    gamma = sic_sinr(powers, pos, power.noise_power,
                                     zeta=sic.zeta, factor=factor)
                    tx = msgs[j].tx
                    sinr[rx_lc, tx] = max(sinr[rx_lc, tx], gamma)
    rates = np.array([[power.bandwidth_hz * log2(1.0 + sinr[i, k]) for k in range(n)]
                      for i in range(n)])
    slack = np.array([[rates[i, k] - scenario.msg[i][k] * scenario.r_min[i][k]
                       for k in range(n)] for i in range(n)])
    return RateReport(
        sinr=sinr,
        rates=rates,
        factor=factor,
        sum_rate=sum_rate(rates, scenario, factor),
        slack=slack,
        feasible=bool((slack >= 0).all()),
    )


def oma_rates(channel: ChannelMatrix, topology: ScTopology, chs: ChSelection,
              scenario: Scenario, pa: PaMatrix, power: PowerConfig) -> RateReport:
    """One orthogonal block per physical message; no interference."""
    return _rates("oma", channel, topology, chs, scenario, pa, power, SicConfig(0.0))


def dm_rates(channel: ChannelMatrix, topology: ScTopology, chs: ChSelection,
             scenario: Scenario, pa: PaMatrix, power: PowerConfig,
             sic: SicConfig) -> RateReport:
    """Each transmitting head superposes its own outgoing messages in one block."""
    return _rates("dm", channel, topology, chs, scenario, pa, power, sic)


def um_rates(channel: ChannelMatrix, topology: ScTopology, chs: ChSelection,
             scenario: Scenario, pa: PaMatrix, power: PowerConfig,
             sic: SicConfig) -> RateReport:
    """One block per destination LC carrying everything addressed to it."""
    return _rates("um", channel, topology, chs, scenario, pa, power, sic)


def udm_rates(channel: ChannelMatrix, topology: ScTopology, chs: ChSelection,
              scenario: Scenario, pa: PaMatrix, power: PowerConfig,
              sic: SicConfig) -> RateReport:
    """Everything in a single block; a receiver hears all foreign heads at
    once (its own head's signal is conveyed over the in-platoon links and
    cancelled perfectly)."""
    return _rates("udm", channel, topology, chs, scenario, pa, power, sic)


def compute_rates(scheme: str, channel: ChannelMatrix, topology: ScTopology,
                  chs: ChSelection, scenario: Scenario, pa: PaMatrix,
                  power: PowerConfig, sic: SicConfig) -> RateReport:
    """Dispatch by scheme name ('oma', 'dm', 'um', 'udm')."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "oma":
        return oma_rates(channel, topology, chs, scenario, pa, power)
    return _rates(scheme, channel, topology, chs, scenario, pa, power, sic)
