"""Software remodularisation toolkit.

Clusters software systems with hierarchical and search-based algorithms,
scores them against directory-derived ground truth with MoJoFM, and learns
per-configuration footprints that recommend a clustering configuration for
a new system from its code metrics.
"""

__version__ = "0.1.0"
