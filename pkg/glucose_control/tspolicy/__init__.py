from .actions import DEFAULT_GRID, ActionGrid
from .bins import BinSpec, discretize, trend_of
from .reward import shaped_reward
from .table import Mode, PolicyTable, dump_table_csv, load_table_csv, merge_tables, select

__all__ = [
    "DEFAULT_GRID",
    "ActionGrid",
    "BinSpec",
    "Mode",
    "PolicyTable",
    "discretize",
    "dump_table_csv",
    "load_table_csv",
    "merge_tables",
    "select",
    "shaped_reward",
    "trend_of",
]
