"""Built-in scenarios, the Monte Carlo experiment runner, and CSV output.

Built-in names reproduce the four studied traffic mixes on the default
four-lane topology (six sedans per platoon, 5 m gaps, 60 m x 12 m road, the
three-platoon variant drops the leftmost lane). Custom scenarios come from a
flat key/value text file, see :func:`parse_scenario_file`.

Every record is reproducible from (spec, seed): trial t draws its channel
with seed XOR t, and solver tie-breaks are deterministic. Wall-clock timing
is the one informational column excluded from that guarantee.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import sqrt
from pathlib import Path

from .allocation import (
    DEFAULT_BUDGET,
    GpaConfig,
    chs_exhaustive_fpa,
    epa,
    evaluate_pa,
    fpa,
    gpa,
    o_chs_pa_oracle,
    pa_oracle,
)
from .channel import ChannelMatrix, ChannelParams, PowerConfig, sample_channel
from .scenario import Scenario, SicConfig
from .topology import RoadConfig, ScTopology, build_fig1_topology, front_chs, md_chs

BUILTIN_SCENARIOS = ("4lc-unicast", "4lc-broadcast", "4lc-hybrid", "3lc-unicast")
PA_METHODS = ("epa", "fpa", "gpa", "oracle")
CHS_METHODS = ("exhaustive-fpa", "md", "oracle", "fixed")
RMIN_PER_LANE_BPS_HZ = 0.1


class UnknownScenarioError(ValueError):
    pass


def _lane_rate_floors(topology: ScTopology) -> tuple[tuple[float, ...], ...]:
    """Floors grow with lane separation: 0.1 bps/Hz per lane of distance."""
    lanes = [lc.lane_index for lc in topology.clusters]
    n = len(lanes)
    return tuple(
        tuple(RMIN_PER_LANE_BPS_HZ * abs(lanes[i] - lanes[k]) if i != k else 0.0
              for k in range(n))
        for i in range(n)
    )


def builtin_scenario(name: str) -> tuple[ScTopology, Scenario]:
    """Topology and traffic mix for one of the studied scenarios."""
    if name not in BUILTIN_SCENARIOS:
        raise UnknownScenarioError(
            f"unknown scenario {name!r}; choose from {', '.join(BUILTIN_SCENARIOS)}")
    n_lc = 3 if name.startswith("3lc") else 4
    topology = build_fig1_topology(n_lc=n_lc, vehicles_per_lc=6, gap_m=5.0)
    full = tuple(
        tuple(1 if i != k else 0 for k in range(n_lc)) for i in range(n_lc))
    if name in ("4lc-unicast", "3lc-unicast"):
        msg, bcast = full, (0,) * n_lc
    elif name == "4lc-broadcast":
        msg, bcast = full, (1,) * n_lc
    else:  # 4lc-hybrid: LC1 unicasts to all, LC2 broadcasts, LC3 multicasts
        # to LC1 and LC4, LC4 stays silent
        msg = (
            (0, 1, 1, 0),
            (1, 0, 0, 0),
            (1, 1, 0, 0),
            (1, 1, 1, 0),
        )
        bcast = (0, 1, 1, 0)
    return topology, Scenario(msg=msg, bcast=bcast,
                              r_min=_lane_rate_floors(topology))


def parse_scenario_file(path: str | Path) -> tuple[ScTopology, Scenario, ChannelParams]:
    """Load a custom scenario from a flat key/value file.

    Grammar: one ``key = value`` per line, ``#`` starts a comment. A value is
    a scalar, a whitespace-separated row, or a matrix with rows separated by
    ``;``. Recognized keys::

        n_lc, vehicles_per_lc, gap_m          geometry counts (ints / float)
        road_length_m, road_width_m, num_lanes
        lane_indices                          row of ints, optional
        lead_x_offsets_m                      row of floats, optional
        msg                                   binary matrix, receiver rows
        bcast                                 binary row
        r_min                                 float matrix, optional
        path_loss_exponent, carrier_freq_ghz  channel scalars
        knife_edge                            true / false
    """
    values: dict[str, list[list[str]]] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected 'key = value', got {line!r}")
        key, payload = (part.strip() for part in line.split("=", 1))
        values[key] = [row.split() for row in payload.split(";")]

    def scalar(key, cast, default=None):
        if key not in values:
            if default is None:
                raise ValueError(f"missing required key {key!r}")
            return default
        rows = values[key]
        if len(rows) != 1 or len(rows[0]) != 1:
            raise ValueError(f"{key!r} must be a scalar")
        return cast(rows[0][0])

    def row(key, cast, default=None):
        if key not in values:
            return default
        rows = values[key]
        if len(rows) != 1:
            raise ValueError(f"{key!r} must be a single row")
        return tuple(cast(v) for v in rows[0])

    def matrix(key, cast, default=None):
        if key not in values:
            return default
        return tuple(tuple(cast(v) for v in r) for r in values[key])

    n_lc = scalar("n_lc", int)
    road = RoadConfig(
        length_m=scalar("road_length_m", float, 60.0),
        width_m=scalar("road_width_m", float, 12.0),
        num_lanes=scalar("num_lanes", int, 4),
    )
    topology = build_fig1_topology(
        n_lc=n_lc,
        vehicles_per_lc=scalar("vehicles_per_lc", int, 6),
        gap_m=scalar("gap_m", float, 5.0),
        road=road,
        lane_indices=row("lane_indices", int),
        lead_x_offsets_m=row("lead_x_offsets_m", float),
    )
    msg = matrix("msg", lambda v: int(v))
    if msg is None:
        raise ValueError("missing required key 'msg'")
    bcast = row("bcast", int, (0,) * n_lc)
    r_min = matrix("r_min", float, _lane_rate_floors(topology))
    scenario = Scenario(msg=msg, bcast=bcast, r_min=r_min)
    params = ChannelParams(
        carrier_freq_hz=scalar("carrier_freq_ghz", float, 5.9) * 1e9,
        path_loss_exponent=scalar("path_loss_exponent", float, 2.7),
        knife_edge_enabled=scalar("knife_edge", lambda v: v.lower() == "true", True),
    )
    return topology, scenario, params


def load_scenario(name_or_path: str) -> tuple[ScTopology, Scenario, ChannelParams]:
    if name_or_path in BUILTIN_SCENARIOS:
        topology, scenario = builtin_scenario(name_or_path)
        return topology, scenario, ChannelParams()
    if Path(name_or_path).exists():
        return parse_scenario_file(name_or_path)
    raise UnknownScenarioError(f"{name_or_path!r} is neither a builtin scenario "
                               "nor an existing scenario file")


@dataclass(frozen=True)
class RunSpec:
    """One experiment: scenario x methods x sweep grids x trials."""

    scenario: str = "4lc-unicast"
    schemes: tuple[str, ...] = ("oma", "dm", "um", "udm")
    pa_method: str = "gpa"
    chs_method: str = "exhaustive-fpa"
    zeta: tuple[float, ...] = (0.0, 0.01, 0.1)
    snr_db: tuple[float, ...] = (50.0,)
    q: tuple[int, ...] = ()
    trials: int = 200
    seed: int = 0
    out: str | None = None
    budget: int = DEFAULT_BUDGET
    max_iterations: int = 100

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.zeta or not self.snr_db:
            raise ValueError("sweep lists must be non-empty")
        if self.pa_method not in PA_METHODS:
            raise ValueError(f"pa_method must be one of {PA_METHODS}")
        if self.chs_method not in CHS_METHODS:
            raise ValueError(f"chs_method must be one of {CHS_METHODS}")
        unknown = set(self.schemes) - {"oma", "dm", "um", "udm"}
        if not self.schemes or unknown:
            raise ValueError(f"bad scheme list: {self.schemes}")
        if self.chs_method == "oracle" and self.pa_method != "oracle":
            raise ValueError("joint oracle selection requires pa_method='oracle'")


@dataclass(frozen=True)
class OutputRecord:
    scenario: str
    scheme: str
    pa_method: str
    chs_method: str
    zeta: float
    snr_db: float
    q: int
    trial: int | str
    sum_rate_bps_hz: float
    feasible: bool
    iterations: int
    wall_time_s: float

    def key(self) -> tuple:
        """Identity without the timing column (the reproducible part)."""
        return (self.scenario, self.scheme, self.pa_method, self.chs_method,
                self.zeta, self.snr_db, self.q, self.trial,
                self.sum_rate_bps_hz, self.feasible, self.iterations)


def _solve_point(topology: ScTopology, scenario: Scenario,
                 channel: ChannelMatrix, scheme: str, spec: RunSpec,
                 zeta: float, snr_db: float, q: int
                 ) -> tuple[float, bool, int]:
    power = PowerConfig.from_snr_db(snr_db)
    sic = SicConfig(zeta)
    if spec.chs_method == "oracle":
        result = o_chs_pa_oracle(scenario, channel, topology, power, sic,
                                 scheme, q, budget=spec.budget)
        return result.sum_rate, result.feasible, result.iterations_used

    if spec.chs_method == "exhaustive-fpa":
        chs = chs_exhaustive_fpa(scenario, channel, topology, power, sic,
                                 scheme, budget=spec.budget)
    elif spec.chs_method == "md":
        chs = md_chs(topology)
    else:
        chs = front_chs(topology)

    if spec.pa_method == "gpa":
        result = gpa(scenario, channel, chs, power, sic, scheme,
                     GpaConfig(q_levels=q, max_iterations=spec.max_iterations))
        return result.sum_rate, result.feasible, result.iterations_used
    if spec.pa_method == "oracle":
        result = pa_oracle(scenario, channel, chs, power, sic, scheme, q,
                           budget=spec.budget)
        return result.sum_rate, result.feasible, result.iterations_used
    pa = epa(scenario) if spec.pa_method == "epa" else fpa(scenario, channel, chs)
    sum_rate, min_slack = evaluate_pa(scenario, channel, chs, power, sic, scheme, pa)
    return sum_rate, bool(min_slack >= 0), 0


def _run_trial(spec: RunSpec, topology: ScTopology, scenario: Scenario,
               params: ChannelParams, q_list: tuple[int, ...],
               trial: int) -> list[OutputRecord]:
    channel = sample_channel(topology, params, spec.seed ^ trial)
    records = []
    for zeta in spec.zeta:
        for snr_db in spec.snr_db:
            for q in q_list:
                for scheme in spec.schemes:
                    start = time.perf_counter()
                    sum_rate, feasible, iters = _solve_point(
                        topology, scenario, channel, scheme, spec, zeta, snr_db, q)
                    records.append(OutputRecord(
                        scenario=spec.scenario, scheme=scheme,
                        pa_method=spec.pa_method, chs_method=spec.chs_method,
                        zeta=zeta, snr_db=snr_db, q=q, trial=trial,
                        sum_rate_bps_hz=sum_rate, feasible=feasible,
                        iterations=iters,
                        wall_time_s=time.perf_counter() - start))
    return records


def run(spec: RunSpec, max_workers: int = 1,
        with_summary: bool = True) -> list[OutputRecord]:
    """Execute the experiment: per-trial records plus mean / ci95 summaries.

    Trials are independent; with ``max_workers > 1`` they run on a thread
    pool (the hot kernel releases the GIL) and records keep their
    (trial, sweep) order regardless of completion order.
    """
    topology, scenario, params = load_scenario(spec.scenario)
    q_list = spec.q or (scenario.n_lc * (scenario.n_lc - 1),)
    trials = range(spec.trials)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(pool.map(
                lambda t: _run_trial(spec, topology, scenario, params, q_list, t),
                trials))
    else:
        chunks = [_run_trial(spec, topology, scenario, params, q_list, t)
                  for t in trials]
    records = [rec for chunk in chunks for rec in chunk]
    if with_summary:
        records.extend(summarize(records))
    return records


def summarize(records: list[OutputRecord]) -> list[OutputRecord]:
    """Mean and 95% normal-approximation half-width per sweep point."""
    groups: dict[tuple, list[OutputRecord]] = {}
    order: list[tuple] = []
    for rec in records:
        if not isinstance(rec.trial, int):
            continue
        key = (rec.scenario, rec.scheme, rec.pa_method, rec.chs_method,
               rec.zeta, rec.snr_db, rec.q)
        if key not in groups:
            order.append(key)
        groups.setdefault(key, []).append(rec)
    out = []
    for key in order:
        recs = groups[key]
        n = len(recs)
        rates = [r.sum_rate_bps_hz for r in recs]
        mean = sum(rates) / n
        var = sum((r - mean) ** 2 for r in rates) / (n - 1) if n > 1 else 0.0
        half = 1.96 * sqrt(var / n) if n > 1 else 0.0
        base = replace(recs[0], feasible=all(r.feasible for r in recs),
                       iterations=max(r.iterations for r in recs),
                       wall_time_s=sum(r.wall_time_s for r in recs))
        out.append(replace(base, trial="mean", sum_rate_bps_hz=mean))
        out.append(replace(base, trial="ci95", sum_rate_bps_hz=half))
    return out


CSV_HEADER = ("scenario,scheme,pa_method,chs_method,zeta,snr_db,q,trial,"
              "sum_rate_bps_hz,feasible,iterations,wall_time_s")


def emit_csv(records: list[OutputRecord], path: str | Path) -> None:
    """Write records with a stable column order and fixed float formatting."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.scenario, r.scheme, r.pa_method, r.chs_method,
            f"{r.zeta:.6g}", f"{r.snr_db:.2f}", str(r.q), str(r.trial),
            f"{r.sum_rate_bps_hz:.10f}", str(int(r.feasible)),
            str(r.iterations), f"{r.wall_time_s:.6f}",
        ]))
    Path(path).write_text("\n".join(lines) + "\n")
