"""CSV trace files: ``n,err_x,err_obj,gamma,alpha,residual,elapsed_ms``."""

import csv

from ..solvers import IterationRecord

HEADER = ("n", "err_x", "err_obj", "gamma", "alpha", "residual", "elapsed_ms")


def _fmt(v):
    return "" if v is None else format(v, ".17g")


def emit_trace(records, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for r in records:
                w.writerow([r.n] + [_fmt(getattr(r, k)) for k in HEADER[1:]])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc.strerror}") from exc


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            vals = [None if cell == "" else float(cell) for cell in row[1:]]
            out.append(IterationRecord(int(row[0]), *vals))
        return out
