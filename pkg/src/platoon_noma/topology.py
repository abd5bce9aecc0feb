"""Road / vehicle / lane-cluster geometry of a single super cluster.

A super cluster (SC) lives on a straight highway segment. Each lane holds one
lane cluster (LC): an ordered platoon of vehicles, front vehicle first.
Everything here is immutable and hashable so that derived geometry
(distances, obstruction lists) can be cached safely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field


class PlacementOverflowError(ValueError):
    """Requested platoon does not fit on the road segment."""


@dataclass(frozen=True)
class RoadConfig:
    """Straight highway segment hosting the super cluster."""

    length_m: float = 60.0
    width_m: float = 12.0
    num_lanes: int = 4

    def __post_init__(self) -> None:
        if self.length_m <= 0 or self.width_m <= 0:
            raise ValueError("road dimensions must be positive")
        if self.num_lanes < 1:
            raise ValueError("need at least one lane")

    @property
    def lane_width_m(self) -> float:
        return self.width_m / self.num_lanes

    def lane_center_y(self, lane_index: int) -> float:
        if not 0 <= lane_index < self.num_lanes:
            raise ValueError(f"lane index {lane_index} out of range")
        return (lane_index + 0.5) * self.lane_width_m


@dataclass(frozen=True)
class VehicleDims:
    """Standard sedan by default: 4.5 m x 1.7 m x 1.7 m, roof antenna."""

    length_m: float = 4.5
    width_m: float = 1.7
    height_m: float = 1.7
    antenna_height_m: float = 1.7

    def __post_init__(self) -> None:
        if min(self.length_m, self.width_m, self.height_m, self.antenna_height_m) <= 0:
            raise ValueError("vehicle dimensions must be positive")
        if self.antenna_height_m > self.height_m + 0.5:
            raise ValueError("antenna cannot sit more than 0.5 m above the roof")


@dataclass(frozen=True)
class Vehicle:
    """One vehicle: longitudinal center position on its lane."""

    x_m: float
    lane_index: int


@dataclass(frozen=True)
class LaneCluster:
    """A platoon in one lane; members ordered front (largest x) first."""

    lane_index: int
    members: tuple[Vehicle, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("a lane cluster needs at least one vehicle")
        if any(v.lane_index != self.lane_index for v in self.members):
            raise ValueError("all members must share the cluster lane")
        xs = [v.x_m for v in self.members]
        if any(later >= earlier for later, earlier in zip(xs[1:], xs)):
            raise ValueError("members must be ordered by decreasing position")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ScTopology:
    """Full geometry of one super cluster."""

    road: RoadConfig
    dims: VehicleDims
    clusters: tuple[LaneCluster, ...]
    inter_vehicle_gap_m: float = 5.0

    def __post_init__(self) -> None:
        if len(self.clusters) < 2:
            raise ValueError("a super cluster needs at least 2 lane clusters")
        half = self.dims.length_m / 2.0
        for lc in self.clusters:
            for a, b in itertools.combinations(lc.members, 2):
                if abs(a.x_m - b.x_m) < self.dims.length_m:
                    raise ValueError("vehicles overlap longitudinally within a lane")
            for v in lc.members:
                if v.x_m - half < 0 or v.x_m + half > self.road.length_m:
                    raise PlacementOverflowError(
                        f"vehicle at x={v.x_m} m extends outside [0, {self.road.length_m}] m"
                    )

    @property
    def n_lc(self) -> int:
        return len(self.clusters)

    def lc_sizes(self) -> tuple[int, ...]:
        return tuple(lc.size for lc in self.clusters)

    def antenna_point(self, lc: int, member: int) -> tuple[float, float, float]:
        """Antenna location (x, y, z) of one vehicle, at the roof center."""
        v = self.clusters[lc].members[member]
        return (v.x_m, self.road.lane_center_y(v.lane_index), self.dims.antenna_height_m)

    def vehicle_ids(self) -> tuple[tuple[int, int], ...]:
        """All (lc, member) index pairs in canonical order."""
        return tuple(
            (i, j) for i, lc in enumerate(self.clusters) for j in range(lc.size)
        )


@dataclass(frozen=True)
class ChSelection:
    """One cluster head per LC, given as member indices (the selection vector)."""

    ch_index_per_lc: tuple[int, ...]

    def validate(self, topology: ScTopology) -> None:
        if len(self.ch_index_per_lc) != topology.n_lc:
            raise ValueError("selection length must match the number of LCs")
        for lc, idx in enumerate(self.ch_index_per_lc):
            if not 0 <= idx < topology.clusters[lc].size:
                raise ValueError(f"CH index {idx} invalid for LC {lc}")


@dataclass(frozen=True)
class Obstruction:
    """A vehicle footprint crossing the TX-RX ground segment."""

    vehicle: tuple[int, int]
    clearance_m: float = field(default=0.0)
    distance_from_tx_m: float = field(default=0.0)


def build_fig1_topology(
    n_lc: int,
    vehicles_per_lc: int,
    gap_m: float = 5.0,
    road: RoadConfig = RoadConfig(),
    dims: VehicleDims = VehicleDims(),
    lane_indices: tuple[int, ...] | None = None,
    lead_x_offsets_m: tuple[float, ...] | None = None,
) -> ScTopology:
    """Build the default layout: one aligned platoon per lane.

    Each LC occupies one lane with vehicles spaced ``gap_m`` bumper to bumper,
    the lead vehicle's front bumper flush with the road end. When fewer LCs
    than lanes are requested, the leftmost (lowest-index) lanes are left empty.
    ``lead_x_offsets_m`` shifts individual platoons backwards from the default
    lead position (all zero keeps the lead vehicles aligned).
    """
    if n_lc < 2:
        raise ValueError("a super cluster needs at least 2 lane clusters")
    if vehicles_per_lc < 1:
        raise ValueError("each lane cluster needs at least one vehicle")
    if n_lc > road.num_lanes:
        raise ValueError("more lane clusters than lanes")
    if lane_indices is None:
        lane_indices = tuple(range(road.num_lanes - n_lc, road.num_lanes))
    if len(lane_indices) != n_lc:
        raise ValueError("lane_indices length must equal n_lc")
    if lead_x_offsets_m is None:
        lead_x_offsets_m = (0.0,) * n_lc
    if len(lead_x_offsets_m) != n_lc:
        raise ValueError("lead_x_offsets_m length must equal n_lc")

    span = vehicles_per_lc * dims.length_m + (vehicles_per_lc - 1) * gap_m
    pitch = dims.length_m + gap_m
    clusters = []
    for lane, offset in zip(lane_indices, lead_x_offsets_m):
        lead_center = road.length_m - dims.length_m / 2.0 - offset
        tail_rear = lead_center - (vehicles_per_lc - 1) * pitch - dims.length_m / 2.0
        if tail_rear < 0:
            raise PlacementOverflowError(
                f"platoon span {span + offset:.1f} m exceeds road length {road.length_m:.1f} m"
            )
        members = tuple(
            Vehicle(x_m=lead_center - j * pitch, lane_index=lane)
            for j in range(vehicles_per_lc)
        )
        clusters.append(LaneCluster(lane_index=lane, members=members))
    return ScTopology(road=road, dims=dims, clusters=tuple(clusters),
                      inter_vehicle_gap_m=gap_m)


def distance(topology: ScTopology, lc_a: int, member_a: int,
             lc_b: int, member_b: int) -> float:
    """Euclidean 3-D distance between the two vehicles' antennas."""
    ax, ay, az = topology.antenna_point(lc_a, member_a)
    bx, by, bz = topology.antenna_point(lc_b, member_b)
    return math.sqrt((ax - bx) ** 2 + (ay - by) ** 2 + (az - bz) ** 2)


def _segment_rectangle_crossing(
    p0: tuple[float, float], p1: tuple[float, float],
    cx: float, cy: float, hx: float, hy: float,
) -> float | None:
    """Liang-Barsky clip of segment p0->p1 against an axis-aligned rectangle.

    Returns the parameter of the chord midpoint, or None when the open
    segment misses the rectangle.
    """
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    t0, t1 = 0.0, 1.0
    for delta, lo, hi, start in (
        (dx, cx - hx, cx + hx, p0[0]),
        (dy, cy - hy, cy + hy, p0[1]),
    ):
        if delta == 0.0:
            if start < lo or start > hi:
                return None
            continue
        ta = (lo - start) / delta
        tb = (hi - start) / delta
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 >= t1:
            return None
    return (t0 + t1) / 2.0


def obstructors(topology: ScTopology, lc_a: int, member_a: int,
                lc_b: int, member_b: int) -> list[Obstruction]:
    """Vehicles whose 2-D footprint blocks the TX-RX ground path.

    Clearance is the blocking roof height minus the line-of-sight height at
    the chord midpoint; positive clearance means the roof pokes above the
    direct ray.
    """
    if (lc_a, member_a) == (lc_b, member_b):
        raise ValueError("endpoints must be distinct vehicles")
    ax, ay, az = topology.antenna_point(lc_a, member_a)
    bx, by, bz = topology.antenna_point(lc_b, member_b)
    total = distance(topology, lc_a, member_a, lc_b, member_b)
    hx = topology.dims.length_m / 2.0
    hy = topology.dims.width_m / 2.0
    found = []
    for i, lc in enumerate(topology.clusters):
        for j, v in enumerate(lc.members):
            if (i, j) in ((lc_a, member_a), (lc_b, member_b)):
                continue
            cy = topology.road.lane_center_y(v.lane_index)
            t = _segment_rectangle_crossing((ax, ay), (bx, by), v.x_m, cy, hx, hy)
            if t is None:
                continue
            los_height = az + t * (bz - az)
            found.append(Obstruction(
                vehicle=(i, j),
                clearance_m=topology.dims.height_m - los_height,
                distance_from_tx_m=t * total,
            ))
    return found


def md_chs(topology: ScTopology) -> ChSelection:
    """Minimum-distance selection: the joint CH choice with the smallest sum
    of pairwise CH-CH distances, found by exhaustive search.

    Ties resolve to the first combination in member-index scan order.
    """
    best: tuple[int, ...] | None = None
    best_cost = math.inf
    ranges = [range(lc.size) for lc in topology.clusters]
    for combo in itertools.product(*ranges):
        cost = 0.0
        for a, b in itertools.combinations(range(topology.n_lc), 2):
            cost += distance(topology, a, combo[a], b, combo[b])
        if cost < best_cost:
            best_cost = cost
            best = combo
    assert best is not None
    return ChSelection(ch_index_per_lc=best)


def front_chs(topology: ScTopology) -> ChSelection:
    """Initial selection: the front vehicle of every platoon."""
    return ChSelection(ch_index_per_lc=(0,) * topology.n_lc)
