"""Capacity-bounded, score-ordered memory of (equation, score, comments)
tuples carried between search iterations."""

from __future__ import annotations

from dataclasses import dataclass

from .expressions import extract_skeleton
from .parsing import parse

BANK_CAPACITY = 5


@dataclass(frozen=True)
class MemoryEntry:
    equation: str   # fitted constants, canonical rendering
    score: float    # R^2 on the task's data matrix
    comments: str


class MemoryBank:
    """Keeps the top entries by score (ties favor earlier insertion). One entry
    per skeleton: re-inserting a known form only survives on a higher score."""

    def __init__(self, capacity: int = BANK_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._slots: list[tuple[float, int, str, MemoryEntry]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._slots)

    @property
    def entries(self) -> list[MemoryEntry]:
        return [slot[3] for slot in self._slots]

    @property
    def best(self) -> MemoryEntry | None:
        return self._slots[0][3] if self._slots else None

    def best_score(self) -> float:
        return self._slots[0][3].score if self._slots else float("-inf")

    def add(self, entry: MemoryEntry) -> None:
        skeleton = extract_skeleton(parse(entry.equation)).canonical_string
        for i, (_, _, skel, existing) in enumerate(self._slots):
            if skel == skeleton:
                if entry.score <= existing.score:
                    return
                del self._slots[i]
                break
        self._seq += 1
        self._slots.append((-entry.score, self._seq, skeleton, entry))
        self._slots.sort(key=lambda s: (s[0], s[1]))
        del self._slots[self.capacity :]

    def update(self, entries: list[MemoryEntry]) -> None:
        for entry in entries:
            self.add(entry)

    def snapshot(self) -> list[dict]:
        return [
            {"equation": e.equation, "score": e.score, "comments": e.comments}
            for e in self.entries
        ]
