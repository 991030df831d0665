"""Ordered, indexed, annotation-aware tuple storage.

Each relation maps original tuples (the key) to their proof annotation
(the payload), so existence checks consider original attributes only and
an in-place annotation update never reorders entries.  Scans are in
lexicographic order of the original tuples; secondary prefix indexes over
arbitrary attribute subsets are built on demand and shared.
"""

from __future__ import annotations

import hashlib
import threading
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator


@dataclass(frozen=True, slots=True)
class Annotation:
    rule: int  # 0 for input tuples
    height: int


EDB_ANNOTATION = Annotation(0, 0)

_annotation_cache: dict[tuple[int, int], Annotation] = {(0, 0): EDB_ANNOTATION}


def make_annotation(rule: int, height: int) -> Annotation:
    """Shared annotation instances: the distinct (rule, height) pairs of an
    evaluation are few, so caching keeps the per-tuple overhead to one
    reference."""
    key = (rule, height)
    cached = _annotation_cache.get(key)
    if cached is None:
        cached = Annotation(rule, height)
        _annotation_cache[key] = cached
    return cached


class InsertOutcome(Enum):
    INSERTED = "inserted"
    UPDATED = "updated"
    REJECTED = "rejected"


@dataclass(frozen=True)
class InsertResult:
    outcome: InsertOutcome
    old: Annotation | None = None  # previous annotation when UPDATED


class _PrefixIndex:
    """Maps values of a fixed attribute subset to the matching tuples.

    Refreshing and lazy per-bucket sorting are guarded by a lock so the
    read-only HTTP service can scan from several threads at once.
    """

    def __init__(self, positions: tuple[int, ...]):
        self.positions = positions
        self._buckets: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
        self._consumed = 0
        self._dirty: set[tuple[int, ...]] = set()
        self._lock = threading.Lock()

    def refresh(self, arrival: list[tuple[int, ...]]) -> None:
        if self._consumed == len(arrival):
            return
        with self._lock:
            for row in arrival[self._consumed :]:
                key = tuple(row[p] for p in self.positions)
                self._buckets.setdefault(key, []).append(row)
                self._dirty.add(key)
            self._consumed = len(arrival)

    def rows(self, key: tuple[int, ...]) -> list[tuple[int, ...]]:
        bucket = self._buckets.get(key)
        if bucket is None:
            return []
        if key in self._dirty:
            with self._lock:
                if key in self._dirty:
                    bucket.sort()
                    self._dirty.discard(key)
        return bucket

    def freeze(self) -> None:
        with self._lock:
            for key in self._dirty:
                self._buckets[key].sort()
            self._dirty.clear()


class RelationStore:
    """Annotated tuple set for one relation."""

    def __init__(self, name: str, arity: int, concurrent: bool = False):
        self.name = name
        self.arity = arity
        self._rows: dict[tuple[int, ...], Annotation] = {}
        self._arrival: list[tuple[int, ...]] = []
        self._sorted: list[tuple[int, ...]] | None = []
        self._indexes: dict[tuple[int, ...], _PrefixIndex] = {}
        self._lock = threading.Lock() if concurrent else None
        self._index_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, row: tuple[int, ...]) -> bool:
        return row in self._rows

    def annotation(self, row: tuple[int, ...]) -> Annotation | None:
        return self._rows.get(row)

    # -- writes ---------------------------------------------------------

    def insert_or_minimize(self, row: tuple[int, ...], annotation: Annotation) -> InsertResult:
        """Insert a tuple, or shrink its annotation if the offer is lower.

        Keeps the minimum height over all offers for one original tuple;
        an equal-height offer is rejected so the first rule id sticks.
        """
        if len(row) != self.arity:
            raise ValueError(
                f"{self.name}: expected arity {self.arity}, got tuple of {len(row)}"
            )
        if self._lock is None:
            return self._insert(row, annotation)
        with self._lock:
            return self._insert(row, annotation)

    def _insert(self, row: tuple[int, ...], annotation: Annotation) -> InsertResult:
        current = self._rows.get(row)
        if current is None:
            self._rows[row] = annotation
            self._arrival.append(row)
            self._sorted = None
            return InsertResult(InsertOutcome.INSERTED)
        if annotation.height < current.height:
            self._rows[row] = annotation
            return InsertResult(InsertOutcome.UPDATED, current)
        return InsertResult(InsertOutcome.REJECTED)

    # -- reads ------------------------------------------------------------

    def contains_with_height_below(self, row: tuple[int, ...], bound: int) -> bool:
        """True iff the tuple exists with stored height <= bound, i.e. an
        insert offering height `bound` would be redundant."""
        current = self._rows.get(row)
        return current is not None and current.height <= bound

    def _sorted_rows(self) -> list[tuple[int, ...]]:
        if self._sorted is None:
            self._sorted = sorted(self._rows)
        return self._sorted

    def scan(self) -> Iterator[tuple[tuple[int, ...], Annotation]]:
        for row in self._sorted_rows():
            yield row, self._rows[row]

    def scan_prefix(
        self, prefix: tuple[int, ...]
    ) -> Iterator[tuple[tuple[int, ...], Annotation]]:
        """Tuples whose first len(prefix) attributes equal `prefix`, in order."""
        if not prefix:
            yield from self.scan()
            return
        rows = self._sorted_rows()
        lo = bisect_left(rows, prefix)
        for i in range(lo, len(rows)):
            row = rows[i]
            if row[: len(prefix)] != prefix:
                break
            yield row, self._rows[row]

    def build_index(self, positions: tuple[int, ...]) -> _PrefixIndex:
        """Ordered index over a subset of original attributes; shared on reuse."""
        index = self._indexes.get(positions)
        if index is None:
            with self._index_lock:
                index = self._indexes.get(positions)
                if index is None:
                    index = _PrefixIndex(positions)
                    self._indexes[positions] = index
        index.refresh(self._arrival)
        return index

    def prepare_index(self, positions: tuple[int, ...]) -> None:
        """Build, refresh and fully sort an index up front (for read phases
        that will be scanned by several threads)."""
        if not positions:
            self._sorted_rows()
            return
        self.build_index(positions).freeze()

    def index_scan(
        self, positions: tuple[int, ...], key: tuple[int, ...]
    ) -> Iterator[tuple[tuple[int, ...], Annotation]]:
        """Tuples whose attributes at `positions` equal `key`, in lexicographic
        order of the full original tuple."""
        if not positions:
            yield from self.scan()
            return
        index = self._indexes.get(positions)
        if index is None or index._consumed != len(self._arrival):
            index = self.build_index(positions)
        for row in index.rows(key):
            yield row, self._rows[row]

    def snapshot_order(self) -> list[tuple[int, ...]]:
        return list(self._sorted_rows())

    def items_unordered(self) -> Iterable[tuple[tuple[int, ...], Annotation]]:
        return self._rows.items()


class Database:
    """All relation stores of one evaluation."""

    def __init__(self) -> None:
        self._relations: dict[str, RelationStore] = {}

    def add_relation(self, name: str, arity: int, concurrent: bool = False) -> RelationStore:
        store = RelationStore(name, arity, concurrent=concurrent)
        self._relations[name] = store
        return store

    def relation(self, name: str) -> RelationStore:
        return self._relations[name]

    def __contains__(self, name: str) -> bool:
        return name in self._relations

    def relations(self) -> Iterable[tuple[str, RelationStore]]:
        return self._relations.items()

    def total_tuples(self) -> int:
        return sum(len(store) for store in self._relations.values())

    def checksum(self) -> str:
        """Content hash over every relation's tuples and annotations."""
        digest = hashlib.sha256()
        for name in sorted(self._relations):
            digest.update(name.encode())
            for row, ann in self._relations[name].scan():
                digest.update(repr((row, ann.rule, ann.height)).encode())
        return digest.hexdigest()
