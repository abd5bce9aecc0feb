"""Figure rendering for sweep results.

Takes the per-trial records produced by the harness and writes summary
figures next to the delimited output: mean sum rate against whichever sweep
axis actually varies (SIC error, transmit SNR, or grid resolution), one line
per access scheme with 95% error bars.
"""

from __future__ import annotations

from collections import defaultdict
from math import sqrt
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import OutputRecord  # noqa: E402

_AXES = ("zeta", "snr_db", "q")
_LABELS = {"zeta": "SIC residual fraction",
           "snr_db": "transmit SNR (dB)",
           "q": "power levels Q"}


def _trial_records(records: list[OutputRecord]) -> list[OutputRecord]:
    return [r for r in records if isinstance(r.trial, int)]


def _series(records: list[OutputRecord], axis: str
            ) -> dict[str, list[tuple[float, float, float]]]:
    """Per scheme: (axis value, mean, ci95 half-width), axis order preserved."""
    groups: dict[tuple[str, float], list[float]] = defaultdict(list)
    for r in records:
        groups[(r.scheme, getattr(r, axis))].append(r.sum_rate_bps_hz)
    out: dict[str, list[tuple[float, float, float]]] = defaultdict(list)
    for (scheme, x), rates in groups.items():
        n = len(rates)
        mean = sum(rates) / n
        var = sum((v - mean) ** 2 for v in rates) / (n - 1) if n > 1 else 0.0
        out[scheme].append((x, mean, 1.96 * sqrt(var / n) if n > 1 else 0.0))
    for series in out.values():
        series.sort(key=lambda p: p[0])
    return dict(out)


def sweep_axes(records: list[OutputRecord]) -> list[str]:
    """Sweep dimensions that take more than one value in the records."""
    trials = _trial_records(records)
    return [axis for axis in _AXES
            if len({getattr(r, axis) for r in trials}) > 1]


def render_sweep_figure(records: list[OutputRecord], axis: str,
                        path: str | Path) -> Path:
    """One figure: mean sum rate vs one sweep axis, a line per scheme."""
    trials = _trial_records(records)
    if not trials:
        raise ValueError("no per-trial records to plot")
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    for scheme, pts in sorted(_series(trials, axis).items()):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        errs = [p[2] for p in pts]
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3,
                    label=scheme.upper())
    ax.set_xlabel(_LABELS[axis])
    ax.set_ylabel("normalized sum rate (bps/Hz)")
    scenario = trials[0].scenario
    ax.set_title(f"{scenario}, {trials[0].pa_method.upper()} / {trials[0].chs_method}")
    ax.grid(alpha=0.3, linestyle="--")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_report(records: list[OutputRecord], out_dir: str | Path,
                  stem: str = "sweep") -> list[Path]:
    """Render one figure per varying sweep axis; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    axes = sweep_axes(records) or ["zeta"]
    return [render_sweep_figure(records, axis, out_dir / f"{stem}_vs_{axis}.png")
            for axis in axes]
