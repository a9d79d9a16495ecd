"""dormalloc: dynamically-partitioned cluster allocation and simulation."""

__version__ = "0.1.0"
