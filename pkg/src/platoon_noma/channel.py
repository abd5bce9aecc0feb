"""Seeded random channel realizations between vehicle antennas.

A link gain is the product of three factors: unit-variance complex Gaussian
small-scale fading, knife-edge diffraction attenuation from vehicles blocking
the line of sight, and power-law path loss d^(-lambda/2). The two
deterministic factors depend only on geometry, so they are computed once per
(topology, params) and reused across fading realizations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .topology import ScTopology, distance, obstructors

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class ChannelParams:
    carrier_freq_hz: float = 5.9e9
    path_loss_exponent: float = 2.7
    knife_edge_enabled: bool = True

    def __post_init__(self) -> None:
        if self.carrier_freq_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.path_loss_exponent <= 0:
            raise ValueError("path loss exponent must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_freq_hz


@dataclass(frozen=True)
class PowerConfig:
    """Total SC power budget and noise level (W = 1 Hz normalization).

    The transmit SNR is p_max / (noise_psd * bandwidth); scaling both power
    and noise together leaves every SINR unchanged.
    """

    p_max: float = 1.0
    noise_psd: float = 1e-5
    bandwidth_hz: float = 1.0

    def __post_init__(self) -> None:
        if min(self.p_max, self.noise_psd, self.bandwidth_hz) <= 0:
            raise ValueError("power, noise and bandwidth must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, p_max: float = 1.0) -> "PowerConfig":
        return cls(p_max=p_max, noise_psd=p_max / 10.0 ** (snr_db / 10.0))

    @property
    def noise_power(self) -> float:
        return self.noise_psd * self.bandwidth_hz

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.p_max / self.noise_power)


def path_loss_amplitude(d_m: float, exponent: float) -> float:
    """Amplitude decay d^(-lambda/2); the power gain is its square."""
    if d_m <= 0:
        raise ValueError("path loss undefined at zero distance")
    return d_m ** (-exponent / 2.0)


def knife_edge_loss_db(clearance_m: float, d_tx_m: float, d_rx_m: float,
                       wavelength_m: float) -> float:
    """Single knife-edge diffraction loss in dB.

    The Fresnel parameter is nu = h * sqrt(2 (d1 + d2) / (lambda d1 d2)).
    Below nu = -0.78 the edge clears the first Fresnel zone and costs
    nothing; above it the standard approximation
    J(nu) = 6.9 + 20 log10(sqrt((nu - 0.1)^2 + 1) + nu - 0.1) applies.
    """
    if d_tx_m <= 0 or d_rx_m <= 0:
        raise ValueError("sub-path distances must be positive")
    nu = clearance_m * math.sqrt(
        2.0 * (d_tx_m + d_rx_m) / (wavelength_m * d_tx_m * d_rx_m)
    )
    if nu <= -0.78:
        return 0.0
    shifted = nu - 0.1
    return 6.9 + 20.0 * math.log10(math.sqrt(shifted * shifted + 1.0) + shifted)


def _link_knife_edge_db(topology: ScTopology, params: ChannelParams,
                        a: tuple[int, int], b: tuple[int, int]) -> float:
    """Worst single-edge loss over all vehicles obstructing the a->b path."""
    total = distance(topology, *a, *b)
    worst = 0.0
    for obs in obstructors(topology, *a, *b):
        d1 = obs.distance_from_tx_m
        d2 = total - d1
        if d1 <= 0 or d2 <= 0:
            continue
        loss = knife_edge_loss_db(obs.clearance_m, d1, d2, params.wavelength_m)
        worst = max(worst, loss)
    return worst


@lru_cache(maxsize=32)
def deterministic_amplitudes(topology: ScTopology,
                             params: ChannelParams) -> np.ndarray:
    """Knife-edge x path-loss amplitude for every vehicle pair (symmetric)."""
    ids = topology.vehicle_ids()
    n = len(ids)
    amp = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = distance(topology, *ids[i], *ids[j])
            a = path_loss_amplitude(d, params.path_loss_exponent)
            if params.knife_edge_enabled:
                a *= 10.0 ** (-_link_knife_edge_db(topology, params, ids[i], ids[j]) / 20.0)
            amp[i, j] = amp[j, i] = a
    return amp


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex gains for one fading realization over all vehicle pairs."""

    topology: ScTopology
    gains: np.ndarray
    seed: int

    def index(self, lc: int, member: int) -> int:
        sizes = self.topology.lc_sizes()
        return sum(sizes[:lc]) + member

    def gain(self, tx: tuple[int, int], rx: tuple[int, int]) -> complex:
        return complex(self.gains[self.index(*tx), self.index(*rx)])

    def power_matrix(self) -> np.ndarray:
        """|h|^2 for every vehicle pair (used by the solvers)."""
        return np.abs(self.gains) ** 2


def sample_channel(topology: ScTopology, params: ChannelParams, seed: int,
                   unit_fading: bool = False) -> ChannelMatrix:
    """Draw one reciprocal channel realization, deterministic per seed.

    Each unordered pair gets a single CN(0, 1) fading draw mirrored to both
    directions. ``unit_fading`` replaces the random factor by 1 (test hook
    that leaves only the deterministic geometry factors).
    """
    amp = deterministic_amplitudes(topology, params)
    n = amp.shape[0]
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    if unit_fading:
        fading = np.ones(len(iu[0]), dtype=complex)
    else:
        draws = rng.standard_normal((len(iu[0]), 2))
        fading = (draws[:, 0] + 1j * draws[:, 1]) / math.sqrt(2.0)
    gains = np.zeros((n, n), dtype=complex)
    gains[iu] = fading * amp[iu]
    gains = gains + gains.T
    gains.setflags(write=False)
    return ChannelMatrix(topology=topology, gains=gains, seed=seed)


def gain_power(matrix: ChannelMatrix, tx: tuple[int, int], rx: tuple[int, int]) -> float:
    """Squared magnitude of the stored complex gain."""
    if tx == rx:
        raise ValueError("gain undefined for a vehicle with itself")
    return abs(matrix.gain(tx, rx)) ** 2


def write_channel_csv(matrix: ChannelMatrix, path: str) -> None:
    """Dump (tx_id, rx_id, re, im) rows for debugging."""
    ids = matrix.topology.vehicle_ids()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tx_lc", "tx_member", "rx_lc", "rx_member", "re", "im"])
        for i, tx in enumerate(ids):
            for j, rx in enumerate(ids):
                if i == j:
                    continue
                h = matrix.gains[i, j]
                writer.writerow([tx[0], tx[1], rx[0], rx[1],
                                 f"{h.real:.12e}", f"{h.imag:.12e}"])
