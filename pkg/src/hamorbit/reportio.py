"""Plain-text report and orbit-table serialization.

Report format (documented in the README): a version header line, then
``[section]`` blocks of ``key = value`` pairs.  The diagnostics trace is its
own section with one whitespace-separated record per line.  All floats are
written with 17 significant digits, which round-trips IEEE doubles exactly,
so identical runs produce byte-identical files.

Orbit table: a CSV with header ``t,q1,...,qn`` and N+1 rows; the closing row
repeats the t = 0 sample at t = T with byte-identical number formatting.
"""

from __future__ import annotations

import numpy as np

from .errors import OrbitFileError

REPORT_HEADER = "# hamorbit report v1"
TRACE_COLUMNS = ("iteration", "f_value", "loop_norm", "weighted_gradient",
                 "distance_proxy", "constraint_residual")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_report(sections, trace=None, gamma_history=None) -> str:
    """Render ordered (name, items) sections, an optional trace, and an
    optional level-estimate history into the report text."""
    lines = [REPORT_HEADER]
    for name, items in sections:
        lines.append(f"[{name}]")
        for key, value in items:
            lines.append(f"{key} = {fmt(value)}")
    if gamma_history is not None:
        lines.append("[gamma_history]")
        lines.append(" ".join(format(g, ".17g") for g in gamma_history))
    if trace is not None:
        lines.append("[cps_trace]")
        lines.append("# " + " ".join(TRACE_COLUMNS))
        for rec in trace:
            lines.append(" ".join(fmt(getattr(rec, c)) for c in TRACE_COLUMNS))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Parse report text back into {section: {key: str}} plus trace rows.

    The trace comes back as a list of dicts keyed by column name; the level
    history as a list of floats.  Values stay strings for everything else.
    """
    sections: dict = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current == "cps_trace":
                sections[current] = []
            elif current == "gamma_history":
                sections[current] = []
            else:
                sections[current] = {}
            continue
        if current == "cps_trace":
            parts = line.split()
            sections[current].append(dict(zip(TRACE_COLUMNS, parts)))
        elif current == "gamma_history":
            sections[current].extend(float(p) for p in line.split())
        elif current is not None and "=" in line:
            key, _, value = line.partition("=")
            sections[current][key.strip()] = value.strip()
    return sections


def write_orbit_table(path, times, positions, period: float) -> None:
    """Write the orbit sample table with its closing repeat row."""
    q = np.asarray(positions, dtype=float)
    t = np.asarray(times, dtype=float)
    n = q.shape[1]
    rows = ["t," + ",".join(f"q{i + 1}" for i in range(n))]
    first_coords = None
    for k in range(q.shape[0]):
        coords = [format(x, ".17g") for x in q[k]]
        if k == 0:
            first_coords = coords
        rows.append(",".join([format(t[k], ".17g")] + coords))
    rows.append(",".join([format(period, ".17g")] + first_coords))
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def read_orbit_table(path):
    """Read an orbit table back as (times (N,), positions (N, n), period).

    Raises :class:`OrbitFileError` with the offending 1-based line number on
    any structural problem.
    """
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as err:
        raise OrbitFileError(f"cannot read orbit file: {err}") from None
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise OrbitFileError("empty orbit file", line=1)
    header = lines[0].split(",")
    if header[0] != "t" or len(header) < 2:
        raise OrbitFileError("header must be t,q1,...,qn", line=1)
    for i, name in enumerate(header[1:], start=1):
        if name != f"q{i}":
            raise OrbitFileError(f"bad column name {name!r}", line=1)
    n = len(header) - 1
    data = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != n + 1:
            raise OrbitFileError(
                f"expected {n + 1} fields, got {len(parts)}", line=lineno
            )
        try:
            data.append([float(p) for p in parts])
        except ValueError:
            raise OrbitFileError("unparsable number", line=lineno) from None
    if len(data) < 9:
        raise OrbitFileError("need at least 9 sample rows (8 nodes + closing row)",
                             line=len(lines))
    arr = np.array(data)
    times, positions = arr[:-1, 0], arr[:-1, 1:]
    period = arr[-1, 0]
    if not np.all(np.isfinite(arr)):
        raise OrbitFileError("non-finite entries in orbit table", line=2)
    if period <= 0.0:
        raise OrbitFileError("closing row must carry the positive period",
                             line=len(lines))
    if np.any(np.diff(times) <= 0.0) or times[0] != 0.0:
        raise OrbitFileError("times must start at 0 and increase", line=2)
    return times, positions, period
