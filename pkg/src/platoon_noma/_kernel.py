"""Vectorized twin of the scalar rate computations.

The discrete power-allocation searches evaluate the network sum rate for up
to millions of candidate allocations per channel realization, which is far
too hot for the per-link path in ``schemes``. This module compiles one flat
evaluator over a batch of allocations with numba. Its outputs are tied to
the scalar path by equality tests; any change here must keep them matching.

A ``DecodePlan`` freezes everything that depends only on (scenario, scheme):
which message components each receiver LC hears per SIC pass, which of them
it must decode, and how per-message rates weigh into the sum rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .channel import ChannelMatrix, PowerConfig
from .scenario import Scenario
from .schemes import receiver_members, scheme_bandwidth_factor
from .topology import ChSelection, ScTopology


@dataclass(frozen=True)
class DecodePlan:
    """Flattened decode structure for one (scenario, scheme)."""

    scheme: str
    factor: float
    msg_tx: np.ndarray          # (m,) transmitter LC per message
    lc_group_start: np.ndarray  # (n_lc+1,) group ranges per receiver LC
    group_start: np.ndarray     # (G+1,) column ranges per group
    group_cols: np.ndarray      # flat message indices, tie-break order
    int_start: np.ndarray       # (G+1,) intended ranges per group
    int_col: np.ndarray         # intended position within its group
    int_pair: np.ndarray        # decode-pair index per intended entry
    pair_weight: np.ndarray     # (n_pairs,) sum-rate weight
    pair_rmin: np.ndarray       # (n_pairs,) rate floor
    pair_rx: np.ndarray         # (n_pairs,) recipient LC
    pair_msg: np.ndarray        # (n_pairs,) message index

    @property
    def n_pairs(self) -> int:
        return len(self.pair_weight)


@lru_cache(maxsize=128)
def build_plan(scenario: Scenario, scheme: str) -> DecodePlan:
    msgs = scenario.messages
    n = scenario.n_lc
    factor = scheme_bandwidth_factor(scenario, scheme)

    pairs = []  # (rx, msg_index)
    for j, m in enumerate(msgs):
        for rx in m.recipients:
            pairs.append((rx, j))
    pair_index = {p: i for i, p in enumerate(pairs)}

    lc_group_start = [0]
    group_start = [0]
    group_cols: list[int] = []
    int_start = [0]
    int_col: list[int] = []
    int_pair: list[int] = []
    for rx_lc in range(n):
        if scheme == "oma":
            groups = [[j] for j, m in enumerate(msgs) if rx_lc in m.recipients]
        elif scheme == "dm":
            groups = [[j for j, m in enumerate(msgs) if m.tx == k]
                      for k in sorted({m.tx for m in msgs}) if k != rx_lc]
        elif scheme == "um":
            groups = [[j for j, m in enumerate(msgs) if rx_lc in m.recipients]]
        elif scheme == "udm":
            groups = [[j for j, m in enumerate(msgs) if m.tx != rx_lc]]
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        for group in groups:
            if not group:
                continue
            group_cols.extend(group)
            group_start.append(len(group_cols))
            for pos, j in enumerate(group):
                if rx_lc in msgs[j].recipients:
                    int_col.append(pos)
                    int_pair.append(pair_index[(rx_lc, j)])
            int_start.append(len(int_col))
        lc_group_start.append(len(group_start) - 1)

    weights = np.array([1.0 / len(msgs[j].recipients) if scenario.bcast[msgs[j].tx]
                        else 1.0 for _, j in pairs])
    rmins = np.array([scenario.r_min[rx][msgs[j].tx] for rx, j in pairs])
    return DecodePlan(
        scheme=scheme,
        factor=factor,
        msg_tx=np.array([m.tx for m in msgs], dtype=np.int64),
        lc_group_start=np.array(lc_group_start, dtype=np.int64),
        group_start=np.array(group_start, dtype=np.int64),
        group_cols=np.array(group_cols, dtype=np.int64),
        int_start=np.array(int_start, dtype=np.int64),
        int_col=np.array(int_col, dtype=np.int64),
        int_pair=np.array(int_pair, dtype=np.int64),
        pair_weight=weights,
        pair_rmin=rmins,
        pair_rx=np.array([rx for rx, _ in pairs], dtype=np.int64),
        pair_msg=np.array([j for _, j in pairs], dtype=np.int64),
    )


def receiver_gain_table(channel: ChannelMatrix, topology: ScTopology,
                        chs: ChSelection, scenario: Scenario
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Power gains (R, n_lc) from every head to every non-head member."""
    receivers = receiver_members(topology, chs, scenario)
    power = channel.power_matrix()
    rows = []
    rx_lc = []
    ch_ids = [channel.index(lc, m) for lc, m in enumerate(chs.ch_index_per_lc)]
    for lc, members in enumerate(receivers):
        for member in members:
            rows.append(channel.index(lc, member))
            rx_lc.append(lc)
    gains = power[np.ix_(rows, ch_ids)]
    return np.ascontiguousarray(gains), np.array(rx_lc, dtype=np.int64)


@njit(cache=True, nogil=True, fastmath=True)
def _batch_eval(alphas, gpc, receiver_lc, lc_group_start, group_start,
                group_cols, int_start, int_col, int_pair, pair_weight,
                pair_sfac, factor, noise, zeta, bandwidth, rates_out):
    B = alphas.shape[0]
    R = gpc.shape[0]
    n_pairs = pair_weight.shape[0]
    want_rates = rates_out.shape[0] == B
    sums = np.empty(B)
    slacks = np.empty(B)
    gam = np.empty(n_pairs)
    p = np.empty(alphas.shape[1])
    for b in range(B):
        for q in range(n_pairs):
            gam[q] = 0.0
        for r in range(R):
            lc = receiver_lc[r]
            for g in range(lc_group_start[lc], lc_group_start[lc + 1]):
                c0 = group_start[g]
                nc = group_start[g + 1] - c0
                tot = 0.0
                for ci in range(nc):
                    col = group_cols[c0 + ci]
                    v = alphas[b, col] * gpc[r, col]
                    p[ci] = v
                    tot += v
                for ii in range(int_start[g], int_start[g + 1]):
                    qpos = int_col[ii]
                    pj = p[qpos]
                    stronger = 0.0
                    for c in range(nc):
                        v = p[c]
                        if v > pj or (v == pj and c < qpos):
                            stronger += v
                    weaker = tot - stronger - pj
                    s = pj / (factor * (noise + weaker + zeta * stronger))
                    if s > gam[int_pair[ii]]:
                        gam[int_pair[ii]] = s
        # accumulate rates in log space: one log for the weighted sum and one
        # for the worst floor margin, with an overflow flush for the product
        acc = 0.0
        prod = 1.0
        min_margin = 1e300
        for q in range(n_pairs):
            one_gamma = 1.0 + gam[q]
            w = pair_weight[q]
            prod *= one_gamma if w == 1.0 else one_gamma ** w
            if prod > 1e280:
                acc += np.log2(prod)
                prod = 1.0
            margin = one_gamma * pair_sfac[q]
            if margin < min_margin:
                min_margin = margin
            if want_rates:
                rates_out[b, q] = bandwidth * np.log2(one_gamma)
        sums[b] = factor * bandwidth * (acc + np.log2(prod))
        slacks[b] = bandwidth * np.log2(min_margin)
    return sums, slacks


def evaluate_fractions(plan: DecodePlan, gains: np.ndarray,
                       receiver_lc: np.ndarray, fractions: np.ndarray,
                       power: PowerConfig, zeta: float,
                       with_rates: bool = False):
    """Sum rate and worst floor slack for a batch of allocations.

    ``fractions`` holds one power fraction per physical message, one row per
    candidate allocation. Returns arrays of shape (B,); with ``with_rates``
    a third (B, n_pairs) array of per-decode-pair rates is appended.
    """
    fractions = np.atleast_2d(np.asarray(fractions, dtype=np.float64))
    gpc = np.ascontiguousarray(gains[:, plan.msg_tx] * power.p_max)
    # floor margins are compared as (1+gamma) * 2^(-rmin/W); exact because
    # log2 is monotone
    pair_sfac = np.exp2(-plan.pair_rmin / power.bandwidth_hz)
    rates_out = (np.empty((fractions.shape[0], plan.n_pairs))
                 if with_rates else np.empty((0, plan.n_pairs)))
    sums, slacks = _batch_eval(
        fractions, gpc, receiver_lc, plan.lc_group_start, plan.group_start,
        plan.group_cols, plan.int_start, plan.int_col, plan.int_pair,
        plan.pair_weight, pair_sfac, plan.factor, power.noise_power,
        zeta, power.bandwidth_hz, rates_out,
    )
    if with_rates:
        return sums, slacks, rates_out
    return sums, slacks


def evaluate_levels(plan: DecodePlan, gains: np.ndarray,
                    receiver_lc: np.ndarray, levels: np.ndarray, q_levels: int,
                    power: PowerConfig, zeta: float
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Same as :func:`evaluate_fractions` for integer level vectors."""
    levels = np.atleast_2d(np.asarray(levels))
    return evaluate_fractions(plan, gains, receiver_lc,
                              levels.astype(np.float64) / q_levels, power, zeta)


@lru_cache(maxsize=None)
def compositions(total: int, slots: int) -> np.ndarray:
    """All length-``slots`` non-negative integer vectors summing to ``total``,
    in ascending lexicographic order."""
    if slots < 1:
        raise ValueError("need at least one slot")
    if slots == 1:
        return np.array([[total]], dtype=np.int16)
    blocks = []
    for first in range(total + 1):
        rest = compositions(total - first, slots - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int16)
        blocks.append(np.hstack((head, rest)))
    return np.vstack(blocks)


def composition_count(total: int, slots: int) -> int:
    return math.comb(total + slots - 1, slots - 1)
