import itertools
import math

import pytest

from platoon_noma.topology import (
    ChSelection,
    LaneCluster,
    PlacementOverflowError,
    RoadConfig,
    ScTopology,
    Vehicle,
    VehicleDims,
    build_fig1_topology,
    distance,
    front_chs,
    md_chs,
    obstructors,
)


def default_topology(**kwargs):
    return build_fig1_topology(n_lc=4, vehicles_per_lc=6, gap_m=5.0, **kwargs)


def test_fig1_span_fits_road():
    # 6 * 4.5 + 5 * 5 = 52 m <= 60 m
    topo = default_topology()
    for lc in topo.clusters:
        front = lc.members[0].x_m + topo.dims.length_m / 2
        rear = lc.members[-1].x_m - topo.dims.length_m / 2
        assert front - rear == pytest.approx(52.0)
        assert rear >= 0 and front <= 60.0


def test_single_lc_rejected():
    with pytest.raises(ValueError):
        build_fig1_topology(n_lc=1, vehicles_per_lc=6)


def test_placement_overflow():
    # 7 * 4.5 + 6 * 5 = 61.5 m > 60 m
    with pytest.raises(PlacementOverflowError):
        build_fig1_topology(n_lc=4, vehicles_per_lc=7, gap_m=5.0)


def test_distance_same_vehicle_is_zero():
    topo = default_topology()
    assert distance(topo, 0, 0, 0, 0) == 0.0


def test_distance_same_lane_pitch():
    # consecutive vehicles sit 4.5 + 5 = 9.5 m apart, same lane and height
    topo = default_topology()
    assert distance(topo, 0, 0, 0, 1) == pytest.approx(9.5)


def test_distance_adjacent_lanes():
    # aligned platoons: same x, lane centers 3 m apart, equal antenna height
    topo = default_topology()
    assert distance(topo, 0, 0, 1, 0) == pytest.approx(3.0)


def test_distance_symmetry_and_triangle_inequality():
    topo = default_topology()
    ids = topo.vehicle_ids()
    for a, b in itertools.combinations(ids, 2):
        assert distance(topo, *a, *b) == pytest.approx(distance(topo, *b, *a))
    for a, b, c in itertools.islice(itertools.combinations(ids, 3), 200):
        dab = distance(topo, *a, *b)
        dbc = distance(topo, *b, *c)
        dac = distance(topo, *a, *c)
        assert dac <= dab + dbc + 1e-12


def test_obstructors_adjacent_clear():
    topo = default_topology()
    assert obstructors(topo, 0, 0, 0, 1) == []


def test_obstructors_inline_vehicle_grazes():
    # same lane, two vehicles apart: the middle one blocks at roof height,
    # which equals the antenna height, so the clearance is exactly zero
    topo = default_topology()
    obs = obstructors(topo, 0, 0, 0, 2)
    assert [o.vehicle for o in obs] == [(0, 1)]
    assert obs[0].clearance_m == pytest.approx(0.0)
    assert 0 < obs[0].distance_from_tx_m < distance(topo, 0, 0, 0, 2)


def test_obstructors_cross_lane_diagonal():
    # a long diagonal from lane 0 to lane 3 crosses middle-lane footprints
    topo = default_topology()
    obs = obstructors(topo, 0, 5, 3, 0)
    crossed_lanes = {topo.clusters[o.vehicle[0]].lane_index for o in obs}
    assert crossed_lanes & {1, 2}


def test_obstructors_reciprocal():
    topo = default_topology()
    fwd = {o.vehicle for o in obstructors(topo, 0, 0, 2, 4)}
    rev = {o.vehicle for o in obstructors(topo, 2, 4, 0, 0)}
    assert fwd == rev


def test_md_chs_aligned_column_picks_common_index():
    # all platoons aligned: any common member index minimizes the pairwise
    # sum, and the scan order settles on the front vehicles
    topo = default_topology()
    assert md_chs(topo).ch_index_per_lc == (0, 0, 0, 0)


def brute_force_md(topo):
    best, best_cost = None, math.inf
    for combo in itertools.product(*[range(lc.size) for lc in topo.clusters]):
        cost = sum(distance(topo, a, combo[a], b, combo[b])
                   for a, b in itertools.combinations(range(topo.n_lc), 2))
        if cost < best_cost:
            best, best_cost = combo, cost
    return best


def test_md_chs_matches_brute_force_on_staggered_layout():
    topo = build_fig1_topology(n_lc=2, vehicles_per_lc=2, gap_m=5.0,
                               lead_x_offsets_m=(0.0, 12.0))
    assert md_chs(topo).ch_index_per_lc == brute_force_md(topo)


def test_md_chs_translation_invariant():
    road = RoadConfig(length_m=200.0)
    base = build_fig1_topology(n_lc=3, vehicles_per_lc=3, road=road,
                               lead_x_offsets_m=(0.0, 7.0, 31.0))
    shifted = build_fig1_topology(n_lc=3, vehicles_per_lc=3, road=road,
                                  lead_x_offsets_m=(50.0, 57.0, 81.0))
    assert md_chs(base).ch_index_per_lc == md_chs(shifted).ch_index_per_lc


def test_ch_selection_validation():
    topo = default_topology()
    front_chs(topo).validate(topo)
    with pytest.raises(ValueError):
        ChSelection(ch_index_per_lc=(0, 0, 0, 6)).validate(topo)
    with pytest.raises(ValueError):
        ChSelection(ch_index_per_lc=(0, 0)).validate(topo)


def test_lane_cluster_ordering_enforced():
    with pytest.raises(ValueError):
        LaneCluster(lane_index=0, members=(Vehicle(10.0, 0), Vehicle(20.0, 0)))


def test_overlapping_vehicles_rejected():
    road = RoadConfig()
    dims = VehicleDims()
    lc = LaneCluster(lane_index=0, members=(Vehicle(30.0, 0), Vehicle(27.0, 0)))
    other = LaneCluster(lane_index=1, members=(Vehicle(30.0, 1),))
    with pytest.raises(ValueError):
        ScTopology(road=road, dims=dims, clusters=(lc, other))


def test_three_lc_variant_skips_leftmost_lane():
    topo = build_fig1_topology(n_lc=3, vehicles_per_lc=6)
    assert tuple(lc.lane_index for lc in topo.clusters) == (1, 2, 3)
