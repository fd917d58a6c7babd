"""Run logs: in-memory trace of a solver run plus CSV round-tripping.

CSV columns are t, segment_kind, k, nash_gap, wall_ms. nash_gap is empty on
rows where no evaluation happened; wall_ms is empty unless the run was
started with timing enabled (timings are excluded by default so identical
configurations produce byte-identical files). Floats are written with repr
and therefore round-trip bit exactly.

Each written CSV gets a JSON metadata sidecar next to it (same name with
.meta.json) carrying the seed, configuration echo and per-segment hand-off
hashes.
"""

import csv
import json
import os
from dataclasses import dataclass, field

from .errors import NumericalError

GAP_CLAMP = 1e-8

_COLUMNS = ("t", "segment_kind", "k", "nash_gap", "wall_ms")


@dataclass(frozen=True)
class LogRow:
    t: int
    segment_kind: str
    k: int
    nash_gap: float = None
    wall_ms: float = None


@dataclass
class RunLog:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, t, segment_kind, k, nash_gap=None, wall_ms=None):
        """Add a row, clamping gap values within solver tolerance of zero.

        Gaps below -GAP_CLAMP indicate a broken evaluation and raise.
        """
        if nash_gap is not None:
            if nash_gap < -GAP_CLAMP:
                raise NumericalError(
                    f"nash gap {nash_gap!r} at t={t} is negative beyond tolerance"
                )
            nash_gap = max(float(nash_gap), 0.0)
        self.rows.append(LogRow(int(t), segment_kind, int(k), nash_gap, wall_ms))

    def gap_series(self):
        """(ts, gaps) over the rows that carry an evaluated gap."""
        pts = [(r.t, r.nash_gap) for r in self.rows if r.nash_gap is not None]
        ts = [p[0] for p in pts]
        gaps = [p[1] for p in pts]
        return ts, gaps

    def final_gap(self):
        for r in reversed(self.rows):
            if r.nash_gap is not None:
                return r.nash_gap
        return None

    def to_csv_string(self):
        lines = [",".join(_COLUMNS)]
        for r in self.rows:
            gap = "" if r.nash_gap is None else repr(r.nash_gap)
            wall = "" if r.wall_ms is None else repr(r.wall_ms)
            lines.append(f"{r.t},{r.segment_kind},{r.k},{gap},{wall}")
        return "\n".join(lines) + "\n"

    def write(self, path):
        """Write the CSV and its metadata sidecar; returns the sidecar path."""
        with open(path, "w") as f:
            f.write(self.to_csv_string())
        sidecar = meta_path(path)
        with open(sidecar, "w") as f:
            json.dump(self.metadata, f, indent=2, sort_keys=True)
            f.write("\n")
        return sidecar


def meta_path(csv_path):
    root, ext = os.path.splitext(str(csv_path))
    return root + ".meta.json"


def read_run_csv(path):
    """Parse a run CSV (and sidecar, if present) back into a RunLog."""
    log = RunLog()
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != _COLUMNS:
            raise ValueError(f"unexpected header {header!r} in {path}")
        for row in reader:
            if len(row) != len(_COLUMNS):
                raise ValueError(f"malformed row {row!r} in {path}")
            t, kind, k, gap, wall = row
            log.rows.append(
                LogRow(
                    int(t), kind, int(k),
                    None if gap == "" else float(gap),
                    None if wall == "" else float(wall),
                )
            )
    sidecar = meta_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as f:
            log.metadata = json.load(f)
    return log
