import math

import numpy as np
import pytest

from platoon_noma.channel import (
    ChannelMatrix,
    ChannelParams,
    PowerConfig,
    gain_power,
    knife_edge_loss_db,
    path_loss_amplitude,
    sample_channel,
    write_channel_csv,
)
from platoon_noma.topology import build_fig1_topology


def test_path_loss_unit_distance():
    assert path_loss_amplitude(1.0, 2.7) == 1.0


def test_path_loss_direct_exponentiation():
    assert path_loss_amplitude(10.0, 2.7) == pytest.approx(10.0 ** -1.35)
    assert path_loss_amplitude(10.0, 2.7) == pytest.approx(0.04467, abs=1e-5)


def test_path_loss_zero_distance_rejected():
    with pytest.raises(ValueError):
        path_loss_amplitude(0.0, 2.7)


def fresnel_clearance(nu, d1, d2, wavelength):
    return nu / math.sqrt(2.0 * (d1 + d2) / (wavelength * d1 * d2))


def test_knife_edge_clear_path():
    c = fresnel_clearance(-0.78, 10.0, 10.0, 0.05)
    assert knife_edge_loss_db(c, 10.0, 10.0, 0.05) == 0.0
    assert knife_edge_loss_db(-1.0, 10.0, 10.0, 0.05) == 0.0


def test_knife_edge_grazing():
    # nu = 0: J = 6.9 + 20 log10(sqrt(1.01) - 0.1)
    expected = 6.9 + 20.0 * math.log10(math.sqrt(1.01) - 0.1)
    assert knife_edge_loss_db(0.0, 10.0, 10.0, 0.05) == pytest.approx(expected)
    assert expected == pytest.approx(6.03, abs=0.01)


def test_knife_edge_deep_shadow():
    # nu = 2.4 evaluated through the same approximation
    nu = 2.4
    expected = 6.9 + 20.0 * math.log10(math.sqrt((nu - 0.1) ** 2 + 1) + nu - 0.1)
    c = fresnel_clearance(nu, 8.0, 12.0, 0.0508)
    assert knife_edge_loss_db(c, 8.0, 12.0, 0.0508) == pytest.approx(expected)
    assert expected == pytest.approx(20.54, abs=0.01)


@pytest.fixture(scope="module")
def topo():
    return build_fig1_topology(n_lc=4, vehicles_per_lc=6, gap_m=5.0)


def test_sample_channel_deterministic(topo):
    params = ChannelParams()
    a = sample_channel(topo, params, seed=42)
    b = sample_channel(topo, params, seed=42)
    assert np.array_equal(a.gains, b.gains)
    c = sample_channel(topo, params, seed=43)
    assert not np.array_equal(a.gains, c.gains)


def test_sample_channel_reciprocal(topo):
    m = sample_channel(topo, ChannelParams(), seed=3)
    assert np.array_equal(m.gains, m.gains.T)


def test_unit_fading_reduces_to_path_loss(topo):
    params = ChannelParams(knife_edge_enabled=False)
    m = sample_channel(topo, params, seed=0, unit_fading=True)
    from platoon_noma.topology import distance

    for pair in [((0, 0), (0, 1)), ((0, 0), (3, 5)), ((1, 2), (2, 4))]:
        d = distance(topo, *pair[0], *pair[1])
        assert gain_power(m, *pair) == pytest.approx(d ** -2.7, rel=1e-12)


def test_gain_monotone_in_distance_without_fading(topo):
    params = ChannelParams(knife_edge_enabled=False)
    m = sample_channel(topo, params, seed=0, unit_fading=True)
    # same-lane chain: gain strictly decreases with member separation
    gains = [gain_power(m, (0, 0), (0, j)) for j in range(1, 6)]
    assert all(a > b for a, b in zip(gains, gains[1:]))


def test_knife_edge_attenuates_blocked_links(topo):
    clear = sample_channel(topo, ChannelParams(knife_edge_enabled=False),
                           seed=0, unit_fading=True)
    blocked = sample_channel(topo, ChannelParams(knife_edge_enabled=True),
                             seed=0, unit_fading=True)
    # (0,0)->(0,2) passes over the roof of (0,1): grazing edge, ~6 dB
    ratio = gain_power(blocked, (0, 0), (0, 2)) / gain_power(clear, (0, 0), (0, 2))
    expected_db = 6.9 + 20.0 * math.log10(math.sqrt(1.01) - 0.1)
    assert 10.0 * math.log10(1.0 / ratio) == pytest.approx(expected_db, rel=1e-9)
    # adjacent vehicles are unobstructed
    assert gain_power(blocked, (0, 0), (0, 1)) == gain_power(clear, (0, 0), (0, 1))


def test_fading_mean_near_unity():
    # >= 1e5 draws of |fading|^2 across pairs and seeds
    topo = build_fig1_topology(n_lc=4, vehicles_per_lc=6, gap_m=5.0)
    params = ChannelParams(knife_edge_enabled=False)
    det = sample_channel(topo, params, seed=0, unit_fading=True).power_matrix()
    iu = np.triu_indices(det.shape[0], k=1)
    total = 0.0
    count = 0
    for seed in range(400):
        m = sample_channel(topo, params, seed=seed).power_matrix()
        total += float((m[iu] / det[iu]).sum())
        count += len(iu[0])
    assert count >= 100_000
    assert total / count == pytest.approx(1.0, abs=0.01)


def test_gain_power_magnitude():
    topo = build_fig1_topology(n_lc=2, vehicles_per_lc=1, gap_m=5.0)
    gains = np.array([[0, 3 + 4j], [3 + 4j, 0]], dtype=complex)
    m = ChannelMatrix(topology=topo, gains=gains, seed=0)
    assert gain_power(m, (0, 0), (1, 0)) == pytest.approx(25.0)
    assert gain_power(m, (1, 0), (0, 0)) == pytest.approx(25.0)
    with pytest.raises(ValueError):
        gain_power(m, (0, 0), (0, 0))


def test_power_config_snr():
    p = PowerConfig.from_snr_db(50.0)
    assert p.p_max / p.noise_power == pytest.approx(1e5)
    assert p.snr_db == pytest.approx(50.0)


def test_channel_csv_dump(tmp_path):
    topo = build_fig1_topology(n_lc=2, vehicles_per_lc=2, gap_m=5.0)
    m = sample_channel(topo, ChannelParams(), seed=1)
    path = tmp_path / "channel.csv"
    write_channel_csv(m, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("tx_lc")
    assert len(lines) == 1 + 4 * 3
