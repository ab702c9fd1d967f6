"""CSV reading shared by the plotting scripts.

The scripts consume only the documented CSV column contracts of the
computation CLI; they never recompute information quantities.
"""

import csv
from pathlib import Path


class PlotInputError(Exception):
    pass


class MissingColumn(PlotInputError):
    pass


class EmptyInput(PlotInputError):
    pass


def read_columns(path, required, optional=()):
    """Return {column: list[str]} for required + present optional columns."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyInput(f"EmptyInput: {path} has no header row") from None
            rows = [row for row in reader if row]
    except OSError as exc:
        raise PlotInputError(f"cannot read {path}: {exc}") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumn(f"MissingColumn: {path} lacks {missing} (header: {header})")
    if not rows:
        raise EmptyInput(f"EmptyInput: {path} has a header but no data rows")
    index = {c: header.index(c) for c in header}
    wanted = list(required) + [c for c in optional if c in header]
    return {c: [row[index[c]] for row in rows] for c in wanted}


def floats(values, default=None):
    out = []
    for v in values:
        if v == "":
            out.append(default)
        else:
            out.append(float(v))
    return out
