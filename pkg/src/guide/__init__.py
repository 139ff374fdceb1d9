"""Causal structure discovery: a policy network proposes directed graphs over
observed variables, a BIC-based reward scores them against data and an
optional prior, and cycle removal plus regression pruning produce the final DAG.
"""

__version__ = "0.1.0"
