"""Random small adaptive Clifford circuits for oracle tests."""

from artifact.checks import random_circuit, random_faults  # noqa: F401
