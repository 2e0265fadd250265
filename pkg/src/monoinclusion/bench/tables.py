"""Function-value error tables over checkpoints or start points."""

from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from .registry import ExperimentConfig, run_experiment

COMPARED = ("mttm", "vttm", "ihpa", "ispa")
TABLE1_CHECKPOINTS = (1, 10, 20, 100, 300, 500)
TABLE2_STARTS = (
    (0.6787, 0.7577),
    (-0.6739, -0.2305),
    (0.4218, -0.9157),
    (-0.9575, 0.9649),
)


@dataclass(frozen=True)
class TableSpec:
    checkpoints: Tuple[int, ...]
    start_points: Tuple[Tuple[float, ...], ...]
    algorithms: Tuple[str, ...] = COMPARED

    def __post_init__(self):
        cp = tuple(int(c) for c in self.checkpoints)
        if not cp or any(c < 1 for c in cp) or any(b <= a for a, b in zip(cp, cp[1:])):
            raise ValueError(f"checkpoints must be positive and strictly increasing: {cp}")
        if not self.start_points or not self.algorithms:
            raise ValueError("need at least one start point and one algorithm")
        if len(self.start_points) > 1 and len(cp) > 1:
            raise ValueError("vary either checkpoints or start points, not both")
        object.__setattr__(self, "checkpoints", cp)
        object.__setattr__(self, "start_points",
                           tuple(tuple(float(v) for v in p) for p in self.start_points))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    @property
    def by_checkpoint(self):
        return len(self.start_points) == 1

    @property
    def max_iters(self):
        return self.checkpoints[-1]


TABLE1 = TableSpec(TABLE1_CHECKPOINTS, (TABLE2_STARTS[0],))
TABLE2 = TableSpec((500,), TABLE2_STARTS)
TABLES = {"table1": TABLE1, "table2": TABLE2}


@dataclass
class Table:
    spec: TableSpec
    row_labels: list
    values: np.ndarray  # rows x algorithms
    traces: dict        # (start index, algorithm) -> trace

    def to_json(self):
        return {
            "rows": self.row_labels,
            "columns": list(self.spec.algorithms),
            "row_kind": "iteration" if self.spec.by_checkpoint else "start_point",
            "values": [[float(v) for v in row] for row in self.values],
        }

    def format(self):
        head = "iter n" if self.spec.by_checkpoint else "start point x0"
        labels = [str(r) if self.spec.by_checkpoint else "[" + ", ".join(f"{v:.4f}" for v in r) + "]"
                  for r in self.row_labels]
        w0 = max(len(head), *(len(s) for s in labels))
        cols = [f"{a.upper():>12}" for a in self.spec.algorithms]
        lines = [f"{head:<{w0}}  " + "  ".join(cols)]
        for lab, row in zip(labels, self.values):
            lines.append(f"{lab:<{w0}}  " + "  ".join(f"{v:>12.4e}" for v in row))
        return "\n".join(lines)


def make_table(spec: TableSpec, base: ExperimentConfig = None,
               problem_id: str = "example2") -> Table:
    """Run every (start point, algorithm) pair and read |Φ(x_n) - Φ*| at the checkpoints."""
    if base is None:
        base = ExperimentConfig(problem_id=problem_id)
    traces = {}
    for i, x0 in enumerate(spec.start_points):
        for alg in spec.algorithms:
            cfg = replace(base, algorithm_id=alg, x0=list(x0), max_iters=spec.max_iters)
            _, traces[i, alg] = run_experiment(cfg)

    def cell(i, alg, n):
        tr = traces[i, alg]
        if len(tr) < n or tr[n - 1].err_obj is None:
            raise ValueError(f"{alg} from start {i} has no objective error at n={n}")
        return tr[n - 1].err_obj

    if spec.by_checkpoint:
        rows = list(spec.checkpoints)
        vals = [[cell(0, a, n) for a in spec.algorithms] for n in rows]
    else:
        rows = [list(p) for p in spec.start_points]
        n = spec.checkpoints[0]
        vals = [[cell(i, a, n) for a in spec.algorithms] for i in range(len(rows))]
    return Table(spec, rows, np.array(vals, dtype=np.float64), traces)
