"""Emitted file formats: timing CSV, wave and phase CSVs, trajectories, SVG.

Every artifact carries the manifest hash: CSV files begin with a
``# manifest sha256=<hex>`` comment line, JSON documents have a
``"manifest"`` member and SVG files an XML comment. See ``FORMATS.md``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import __version__
from .errors import CorridorFormatError
from .timing import TimingRow, TimingTable
from .waves import NORTH, SignalPhase, WavePath, arrow_interval, PhaseTiming

TIMING_COLUMNS = (
    "row",
    "name",
    "odometer_km",
    "is_node",
    "speed_limit_kph",
    "L_g_km",
    "v_g_kph",
    "xi",
    "T_gf_s",
    "T_gx_s",
    "T_offset_s",
    "T_roffset_s",
)


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)  # label -> sha256 of content
    params: dict = field(default_factory=dict)
    version: str = __version__

    def add_input(self, label: str, content: str | bytes) -> None:
        data = content.encode("utf-8") if isinstance(content, str) else content
        self.inputs[label] = hashlib.sha256(data).hexdigest()

    def to_dict(self) -> dict:
        return {"command": self.command, "inputs": dict(sorted(self.inputs.items())), "params": self.params, "version": self.version}

    @property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _comment(manifest: RunManifest | None) -> str:
    return f"# manifest sha256={manifest.digest}\n" if manifest is not None else ""


def _fmt(x, digits: int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if digits is None:
        return repr(float(x))
    return f"{x:.{digits}f}"


def timing_csv(table: TimingTable, manifest: RunManifest | None = None, full_precision: bool = False) -> str:
    """Timing table as CSV; seconds to 1 decimal, xi to 4, unless `full_precision`."""
    digits = {"odometer_km": 3, "speed_limit_kph": 1, "L_g_km": 3, "v_g_kph": 1, "xi": 4, "T_gf_s": 1, "T_gx_s": 1, "T_offset_s": 1, "T_roffset_s": 1}
    buf = io.StringIO()
    buf.write(_comment(manifest))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMING_COLUMNS)
    for i, r in enumerate(table.rows, start=1):
        vals = {
            "odometer_km": r.odometer,
            "is_node": r.is_node,
            "speed_limit_kph": r.speed_limit,
            "L_g_km": r.L_g,
            "v_g_kph": r.v_g,
            "xi": r.xi,
            "T_gf_s": r.T_gf,
            "T_gx_s": r.T_gx,
            "T_offset_s": r.T_offset,
            "T_roffset_s": r.T_roffset,
        }
        w.writerow([i, r.name] + [_fmt(vals[c], None if full_precision else digits.get(c)) for c in TIMING_COLUMNS[2:]])
    return buf.getvalue()


def read_timing_csv(text: str | TextIO) -> TimingTable:
    """Parse a timing CSV back into a table.

    Node kind, node index and the d parameter are not part of the file; node
    rows come back with ``node_kind="node"`` and their order among nodes as
    index.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(header) != TIMING_COLUMNS:
        raise CorridorFormatError("timing CSV header mismatch", line=1)
    rows = []
    node_i = 0
    for ln, rec in enumerate(reader, start=1):
        if len(rec) != len(TIMING_COLUMNS):
            raise CorridorFormatError(f"malformed timing row at line {ln}", line=ln)
        d = dict(zip(TIMING_COLUMNS, rec))
        try:
            is_node = d["is_node"] == "1"
            rows.append(
                TimingRow(
                    name=d["name"],
                    odometer=float(d["odometer_km"]),
                    is_node=is_node,
                    node_kind="node" if is_node else None,
                    node_index=node_i if is_node else None,
                    speed_limit=float(d["speed_limit_kph"]),
                    L_g=float(d["L_g_km"]),
                    v_g=float(d["v_g_kph"]),
                    xi=float(d["xi"]),
                    d=None,
                    T_gf=float(d["T_gf_s"]),
                    T_gx=float(d["T_gx_s"]),
                    T_offset=float(d["T_offset_s"]) if d["T_offset_s"] else None,
                    T_roffset=float(d["T_roffset_s"]),
                )
            )
        except ValueError:
            raise CorridorFormatError(f"non-numeric timing value at line {ln}", line=ln) from None
        node_i += int(is_node)
    if not rows:
        raise CorridorFormatError("timing CSV has no rows")
    green = next((r.T_gf for r in rows if r.is_node), rows[0].T_gf)
    return TimingTable(tuple(rows), green, rows[0].T_gf + rows[0].T_gx)


def same_table(a: TimingTable, b: TimingTable) -> bool:
    """Equality on every field a timing CSV carries."""
    if len(a) != len(b) or a.cycle_time != b.cycle_time:
        return False
    keys = ("name", "odometer", "is_node", "speed_limit", "L_g", "v_g", "xi", "T_gf", "T_gx", "T_offset", "T_roffset")
    return all(getattr(x, k) == getattr(y, k) for x, y in zip(a.rows, b.rows) for k in keys)


def waves_csv(paths: Sequence[WavePath], t_max: float, step: float, manifest: RunManifest | None = None) -> str:
    """All on-corridor arrows sampled every `step` seconds on [0, t_max]."""
    buf = io.StringIO()
    buf.write(_comment(manifest))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t_s", "k", "tail_km", "head_km", "direction"))
    n = int(math.floor(t_max / step + 1e-9))
    for p in paths:
        C = p.cycle_time
        for i in range(n + 1):
            t = i * step
            k_hi = math.floor((t - p.start_time) / C)
            k_lo = math.ceil((t - p.end_time - p.green_time) / C)
            for k in range(k_lo, k_hi + 1):
                tail, head = arrow_interval(p, k, t)
                if tail != head:
                    w.writerow((f"{t:.3f}", k, f"{tail:.6f}", f"{head:.6f}", p.direction))
    return buf.getvalue()


def phase_spans(timing: PhaseTiming, t0: float, t1: float) -> list[tuple[float, float, SignalPhase]]:
    """Maximal constant-phase spans clipped to [t0, t1)."""
    out = []
    g = timing.green_start(t0)
    while g < t1:
        edges = (
            (g, g + timing.T_gf - timing.amber - timing.all_red, SignalPhase.GREEN),
            (g + timing.T_gf - timing.amber - timing.all_red, g + timing.T_gf - timing.all_red, SignalPhase.AMBER),
            (g + timing.T_gf - timing.all_red, g + timing.cycle_time, SignalPhase.RED),
        )
        for a, b, ph in edges:
            a, b = max(a, t0), min(b, t1)
            if b > a:
                out.append((a, b, ph))
        g += timing.cycle_time
    return out


def phases_csv(table: TimingTable, timings: dict[str, PhaseTiming], t_max: float, manifest: RunManifest | None = None) -> str:
    buf = io.StringIO()
    buf.write(_comment(manifest))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", "odometer_km", "t_start_s", "t_end_s", "phase"))
    for r in table.rows:
        for a, b, ph in phase_spans(timings[r.name], 0.0, t_max):
            w.writerow((r.name, f"{r.odometer:.3f}", f"{a:.3f}", f"{b:.3f}", ph.value))
    return buf.getvalue()


def _to_odometer(x_m, origin_km: float, direction: str):
    return origin_km + np.asarray(x_m) / 1000.0 if direction == NORTH else origin_km - np.asarray(x_m) / 1000.0


def trajectories_csv(logs, head: WavePath, origin_km: float, direction: str, step: float = 1.0, manifest: RunManifest | None = None) -> str:
    """Columns: t_s, head_km, then one odometer column per vehicle (blank outside its run)."""
    from .waves import head_position

    buf = io.StringIO()
    buf.write(_comment(manifest))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_s", "head_km"] + [f"veh{lg.index}_km" for lg in logs])
    if not logs:
        return buf.getvalue()
    t_end = max(lg.entry_time + lg.dt * (len(lg.x) - 1) for lg in logs)
    times = np.arange(0.0, t_end + 1e-9, step)
    cols = []
    for lg in logs:
        tr = lg.trajectory
        od = _to_odometer(tr.position(times), origin_km, direction)
        inside = (times >= tr.t0) & (times <= tr.t_end)
        cols.append([f"{o:.6f}" if ok else "" for o, ok in zip(od, inside)])
    heads = head_position(head, times)
    for i, t in enumerate(times):
        w.writerow([f"{t:.3f}", f"{heads[i]:.6f}"] + [c[i] for c in cols])
    return buf.getvalue()


def plateaus(t: np.ndarray, x: np.ndarray, tol: float = 1e-9) -> list[tuple[float, float, float]]:
    """(start, end, position) of every zero-slope span of a sampled polyline."""
    flat = np.abs(np.diff(x)) <= tol
    out = []
    i = 0
    while i < len(flat):
        if flat[i]:
            j = i
            while j < len(flat) and flat[j]:
                j += 1
            out.append((float(t[i]), float(t[j]), float(x[i])))
            i = j
        else:
            i += 1
    return out


_PHASE_COLOURS = {SignalPhase.GREEN: "#2e8b57", SignalPhase.AMBER: "#e0a800", SignalPhase.RED: "#c0392b"}


def diagram_svg(
    table: TimingTable,
    timings: dict[str, PhaseTiming],
    polylines: Iterable[tuple[str, np.ndarray, np.ndarray]],
    t_max: float,
    manifest: RunManifest | None = None,
    width: int = 1200,
    height: int = 800,
) -> str:
    """Time-space diagram: time on x, odometer on y, a phase band per site."""
    lo = min(r.odometer for r in table.rows)
    hi = max(r.odometer for r in table.rows)
    pad = 40

    def X(t):
        return pad + (width - 2 * pad) * t / t_max

    def Y(o):
        return height - pad - (height - 2 * pad) * (o - lo) / (hi - lo)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
    ]
    if manifest is not None:
        out.append(f"<!-- manifest sha256={manifest.digest} -->")
    out.append('<g id="phases" stroke-width="3">')
    for r in table.rows:
        y = Y(r.odometer)
        for a, b, ph in phase_spans(timings[r.name], 0.0, t_max):
            out.append(f'<line x1="{X(a):.2f}" y1="{y:.2f}" x2="{X(b):.2f}" y2="{y:.2f}" stroke="{_PHASE_COLOURS[ph]}"/>')
    out.append("</g>")
    out.append('<g id="vehicles" fill="none" stroke="#1f3b73" stroke-width="1">')
    for label, t, o in polylines:
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t, o))
        out.append(f'<polyline data-vehicle="{label}" points="{pts}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def json_document(payload: dict, manifest: RunManifest | None = None) -> str:
    doc = dict(payload)
    if manifest is not None:
        doc["manifest"] = {"sha256": manifest.digest, **manifest.to_dict()}
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(f"cannot serialise {type(o).__name__}")
