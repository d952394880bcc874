"""Line-oriented decimal text format shared by every file the package writes.

A file is a header line (``<kind> v1``) followed by lines of space-separated
decimal integers.  Single-value files put one integer per line.
"""

from __future__ import annotations


class FormatError(ValueError):
    pass


def dump_rows(header: str, rows) -> str:
    lines = [header]
    lines.extend(" ".join(str(int(v)) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def load_rows(header: str, text: str) -> list[list[int]]:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != header:
        got = lines[0] if lines else "<empty>"
        raise FormatError(f"expected header {header!r}, got {got!r}")
    try:
        return [[int(tok) for tok in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dump_ints(header: str, values) -> str:
    return dump_rows(header, [[v] for v in values])


def load_ints(header: str, text: str, counts: tuple[int, ...]) -> list[int]:
    rows = load_rows(header, text)
    if any(len(r) != 1 for r in rows):
        raise FormatError("expected one integer per line")
    if len(rows) not in counts:
        raise FormatError(f"expected {' or '.join(map(str, counts))} values, got {len(rows)}")
    return [r[0] for r in rows]


def record(**fields) -> str:
    """One ``key=value`` line in the given field order."""
    return " ".join(f"{k}={_fmt(v)}" for k, v in fields.items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def parse_record(line: str) -> dict[str, str]:
    out = {}
    for tok in line.split():
        key, sep, value = tok.partition("=")
        if not sep:
            raise FormatError(f"malformed field {tok!r}")
        out[key] = value
    return out
