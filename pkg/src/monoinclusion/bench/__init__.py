from .registry import ExperimentConfig, PROBLEMS, random_quadratic_l1, registry_lookup, run_experiment
from .tables import TABLE1, TABLE2, Table, TableSpec, make_table
from .traces import HEADER, emit_trace, read_trace
