"""Timeline reporting: element lifetimes as CSV plus rendered figures.

Consumes the JSON-lines timeline that replay writes and distills it into
things a human can skim: a per-element table, a lifespan chart, and a
placement scatter.  Removal times are read off the timeline itself (the
first update an element is absent from), so the report shows what clients
actually saw rather than what was scheduled.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first


@dataclass
class ElementRecord:
    element_id: int
    kind: str
    content: str
    trigger: str
    created_ms: int
    removed_ms: int | None = None
    last_x: float = 0.5
    last_y: float = 0.5


@dataclass
class TimelineReport:
    header: dict
    records: list[ElementRecord] = field(default_factory=list)
    final_t_ms: int = 0


def load_timeline(path: str) -> TimelineReport:
    header: dict = {}
    by_id: dict[int, ElementRecord] = {}
    live: set[int] = set()
    final_t = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("type") == "header":
                header = obj
                continue
            if obj.get("type") != "SceneUpdate":
                continue
            payload = obj["payload"]
            t_ms = payload["t_ms"]
            final_t = max(final_t, t_ms)
            seen = set()
            for el in payload["elements"]:
                eid = el["id"]
                seen.add(eid)
                rec = by_id.get(eid)
                if rec is None:
                    rec = ElementRecord(
                        element_id=eid,
                        kind=el["kind"],
                        content=el["content"],
                        trigger=el.get("trigger", ""),
                        created_ms=el["created_ms"],
                    )
                    by_id[eid] = rec
                rec.content = el["content"]  # lists grow over time
                rec.last_x = el["x"]
                rec.last_y = el["y"]
            for eid in live - seen:
                if by_id[eid].removed_ms is None:
                    by_id[eid].removed_ms = t_ms
            live = seen
    records = sorted(by_id.values(), key=lambda r: r.element_id)
    return TimelineReport(header=header, records=records, final_t_ms=final_t)


def write_csv(report: TimelineReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "kind", "content", "trigger", "created_ms", "removed_ms", "lifetime_ms", "x", "y"]
        )
        for rec in report.records:
            removed = rec.removed_ms
            lifetime = "" if removed is None else removed - rec.created_ms
            writer.writerow(
                [
                    rec.element_id,
                    rec.kind,
                    rec.content,
                    rec.trigger,
                    rec.created_ms,
                    "" if removed is None else removed,
                    lifetime,
                    f"{rec.last_x:.4f}",
                    f"{rec.last_y:.4f}",
                ]
            )


def render_lifespan_figure(report: TimelineReport, path: str) -> None:
    fig, ax = plt.subplots(figsize=(9, max(2.0, 0.4 * len(report.records) + 1)))
    for row, rec in enumerate(report.records):
        end = rec.removed_ms if rec.removed_ms is not None else report.final_t_ms
        ax.broken_barh([(rec.created_ms, max(1, end - rec.created_ms))], (row - 0.35, 0.7))
        label = rec.content if len(rec.content) <= 28 else rec.content[:25] + "..."
        ax.text(rec.created_ms, row + 0.42, f"#{rec.element_id} {label}", fontsize=7)
    ax.set_yticks(range(len(report.records)))
    ax.set_yticklabels([f"#{r.element_id}" for r in report.records], fontsize=7)
    ax.set_xlabel("session time (ms)")
    ax.set_title("element lifespans")
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_placement_figure(report: TimelineReport, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    kinds = sorted({r.kind for r in report.records})
    for kind in kinds:
        xs = [r.last_x for r in report.records if r.kind == kind]
        ys = [r.last_y for r in report.records if r.kind == kind]
        ax.scatter(xs, ys, label=kind, s=36)
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)  # screen coords: y grows downward
    ax.set_xlabel("x (normalized)")
    ax.set_ylabel("y (normalized)")
    ax.set_title("final element positions")
    if kinds:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(timeline_path: str, out_dir: str) -> dict:
    """CSV plus figures into out_dir; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    report = load_timeline(timeline_path)
    paths = {
        "csv": os.path.join(out_dir, "elements.csv"),
        "lifespans": os.path.join(out_dir, "timeline.png"),
        "positions": os.path.join(out_dir, "positions.png"),
    }
    write_csv(report, paths["csv"])
    render_lifespan_figure(report, paths["lifespans"])
    render_placement_figure(report, paths["positions"])
    return paths
