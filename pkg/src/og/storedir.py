"""A persisted graph directory: snapshot, append-only log, lock file.

The snapshot is a wire-format file with an integrity header and the full
dictionary; the log holds signed entries appended since the snapshot was
written. One writer process at a time is enforced with an advisory lock
file; read-only users skip the lock and see the last committed state.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .core import OgError
from .store import Graph, apply_log, log_line, read_snapshot, write_snapshot
from .wire import Diagnostic

SNAPSHOT_NAME = "snapshot.ogt"
LOG_NAME = "log.oglog"
LOCK_NAME = "lock"


class StoreLockedError(OgError):
    """Another process holds the store's write lock."""


class Store:
    """Handle on a store directory.

    ``open()`` loads the committed state; mutations on the returned graph
    stay in memory until ``commit()`` appends them to the log. The whole
    in-memory log replays the store's history from empty, so only the
    entries past the load point are written out.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.snapshot_path = self.root / SNAPSHOT_NAME
        self.log_path = self.root / LOG_NAME
        self.lock_path = self.root / LOCK_NAME
        self.graph: Graph | None = None
        self.load_diagnostics: list[Diagnostic] = []
        self._persisted_seq = 0

    def open(self) -> Graph:
        """Load snapshot plus log; a missing store reads as empty."""
        if self.snapshot_path.exists():
            with self.snapshot_path.open("r", encoding="utf-8", newline="") as fp:
                g = read_snapshot(fp)
        else:
            g = Graph()
        self.load_diagnostics = []
        if self.log_path.exists():
            with self.log_path.open("r", encoding="utf-8", newline="") as fp:
                self.load_diagnostics = apply_log(g, fp.read())
        self.graph = g
        self._persisted_seq = len(g.log)
        return g

    def commit(self) -> int:
        """Append unwritten log entries; returns how many were written."""
        if self.graph is None:
            raise OgError("store is not open")
        pending = self.graph.log[self._persisted_seq :]
        if not pending:
            return 0
        self.root.mkdir(parents=True, exist_ok=True)
        if not self.snapshot_path.exists():
            # An empty baseline snapshot so the pair is always complete.
            with self.snapshot_path.open("w", encoding="utf-8", newline="") as fp:
                write_snapshot(Graph(), fp)
        with self.log_path.open("a", encoding="utf-8", newline="") as fp:
            for entry in pending:
                fp.write(log_line(entry) + "\n")
        self._persisted_seq = len(self.graph.log)
        return len(pending)

    def compact(self) -> None:
        """Rewrite the snapshot from the live graph and truncate the log."""
        if self.graph is None:
            raise OgError("store is not open")
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.snapshot_path.with_suffix(".ogt.tmp")
        with tmp.open("w", encoding="utf-8", newline="") as fp:
            write_snapshot(self.graph, fp)
        tmp.replace(self.snapshot_path)
        self.log_path.write_text("", encoding="utf-8")
        self._persisted_seq = len(self.graph.log)

    @contextmanager
    def write_lock(self) -> Iterator[None]:
        """Advisory single-writer lock for the directory."""
        self.root.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLockedError(
                f"store {self.root} is locked by another writer"
            ) from None
        try:
            os.write(fd, f"{os.getpid()}\n".encode("ascii"))
            os.close(fd)
            yield
        finally:
            try:
                self.lock_path.unlink()
            except FileNotFoundError:
                pass
