"""SVG figures: analysis-frame trajectories and event timelines."""

from __future__ import annotations

import logging
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)

MARKER_SAMPLE = 30
_SVG_RC = {"svg.hashsalt": "pedwarn", "svg.fonttype": "none"}


def _group(records: Sequence[dict]):
    by_id = defaultdict(list)
    for r in records:
        by_id[int(r["id"])].append(r)
    return {k: sorted(v, key=lambda r: r["t"]) for k, v in sorted(by_id.items())}


def _trajectory(ax, logs: Mapping[str, Sequence[dict]]):
    tracks = _group(logs.get("tracks", ()))
    if not tracks:
        log.warning("trajectory plot: no track samples, emitting empty axes")
    for tid, rows in tracks.items():
        xs = [r["x"] for r in rows]
        ys = [r["y"] for r in rows]
        line, = ax.plot(xs, ys, lw=1.2, label=f"id {tid}", gid=f"track-{tid}")
        if len(rows) >= MARKER_SAMPLE:
            ax.plot([xs[MARKER_SAMPLE - 1]], [ys[MARKER_SAMPLE - 1]], "o", ms=5,
                    color=line.get_color(), gid=f"sample{MARKER_SAMPLE}-{tid}")
    ax.set_xlabel("longitudinal x [m]")
    ax.set_ylabel("lateral y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    if tracks:
        ax.legend(loc="best", fontsize=8)


def _timeline(ax, logs: Mapping[str, Sequence[dict]]):
    dets = _group(logs.get("detections", ()))
    warns = logs.get("warnings", ())
    if not dets and not warns:
        log.warning("timeline plot: no events, emitting empty axes")
    rows = {tid: i for i, tid in enumerate(sorted(set(dets) | {int(w["id"]) for w in warns}))}
    for tid, recs in dets.items():
        ax.plot([r["t"] for r in recs], [rows[tid]] * len(recs), "|", ms=4, color="0.5",
                gid=f"detections-{tid}")
    for sev, marker, color in (("early", "^", "tab:orange"), ("emergency", "X", "tab:red")):
        ws = [w for w in warns if w["severity"] == sev]
        if ws:
            ax.plot([w["t"] for w in ws], [rows[int(w["id"])] for w in ws], marker, ms=9,
                    color=color, ls="none", label=sev, gid=f"warnings-{sev}")
    ax.set_yticks(range(len(rows)), [str(t) for t in rows])
    ax.set_xlabel("time [s]")
    ax.set_ylabel("track id")
    if warns:
        ax.legend(loc="best", fontsize=8)


def emit_plot(logs: Mapping[str, Sequence[dict]], kind: str, path: Union[str, Path]) -> Path:
    """Write an SVG of ``kind`` ``"trajectory"`` or ``"timeline"``.

    ``logs`` maps log names (``tracks``, ``detections``, ``warnings``) to
    their parsed records. Every polyline carries an SVG id so figures can
    be checked programmatically.
    """
    draw = {"trajectory": _trajectory, "timeline": _timeline}.get(kind)
    if draw is None:
        raise ValueError(f"unknown plot kind {kind!r}")
    path = Path(path)
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 5))
        try:
            draw(ax, logs)
            ax.grid(True, lw=0.3)
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
