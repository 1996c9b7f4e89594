"""Batch plotting for persisted droplet-experiment outputs.

Pure readers: every script consumes the primary component's versioned files
(rcmsnap snapshots, circuit/profile/regeneration JSON, experiment CSV) and
never calls back into it.
"""

__version__ = "0.1.0"

SNAPSHOT_HEADER = "rcmsnap v1"
