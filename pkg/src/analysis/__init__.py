"""
Sparsity, sweep and mitigation reports.
"""

from .sparsity import AnalysisError, ClassSparsity, SparsityReport, sparsity
from .reports import improvement, mitigation_table, read_sweep_table, sweep_table, write_sweep_table

__all__ = [
    "AnalysisError",
    "ClassSparsity",
    "SparsityReport",
    "improvement",
    "mitigation_table",
    "read_sweep_table",
    "sparsity",
    "sweep_table",
    "write_sweep_table",
]
