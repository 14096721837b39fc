"""Knowledge-source adaptation: success/failure memories, learned choice
probabilities, roulette selection and the focus-search monitor."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EmptyWindowError(RuntimeError):
    """Probabilities were requested before any generation was stored."""


class MemoryWindow:
    """Sliding window of per-source success/failure counts.

    Holds up to ``lp`` completed generation columns in a ring buffer plus
    one staging column for the generation currently being evaluated.
    """

    def __init__(self, lp: int, k: int):
        if lp < 1 or k < 1:
            raise ValueError("window length and source count must be >= 1")
        self.lp = lp
        self.k = k
        self.ns = np.zeros((lp, k), dtype=np.int64)
        self.nf = np.zeros((lp, k), dtype=np.int64)
        self.filled = 0
        self.head = 0  # index of the oldest stored column
        self._cur_ns = np.zeros(k, dtype=np.int64)
        self._cur_nf = np.zeros(k, dtype=np.int64)

    def record(self, source: int, improved: bool) -> None:
        """Count one evaluation outcome against the current generation."""
        if not 0 <= source < self.k:
            raise IndexError(f"source index {source} out of range [0, {self.k})")
        if improved:
            self._cur_ns[source] += 1
        else:
            self._cur_nf[source] += 1

    def record_counts(self, ns_col: np.ndarray, nf_col: np.ndarray) -> None:
        """Bulk form of :meth:`record` for one generation's tallies."""
        self._cur_ns += np.asarray(ns_col, dtype=np.int64)
        self._cur_nf += np.asarray(nf_col, dtype=np.int64)

    def commit_generation(self) -> None:
        """Store the staged column; overwrites the oldest one when full."""
        if self.filled == self.lp:
            slot = self.head
            self.head = (self.head + 1) % self.lp
        else:
            slot = (self.head + self.filled) % self.lp
            self.filled += 1
        self.ns[slot] = self._cur_ns
        self.nf[slot] = self._cur_nf
        self._cur_ns[:] = 0
        self._cur_nf[:] = 0

    def evict_oldest(self) -> None:
        if self.filled == 0:
            raise EmptyWindowError("cannot evict from an empty window")
        self.ns[self.head] = 0
        self.nf[self.head] = 0
        self.head = (self.head + 1) % self.lp
        self.filled -= 1

    def success_sums(self) -> np.ndarray:
        return self.ns.sum(axis=0)

    def failure_sums(self) -> np.ndarray:
        return self.nf.sum(axis=0)

    def columns(self) -> tuple[np.ndarray, np.ndarray]:
        """Stored (ns, nf) columns in oldest-to-newest order."""
        idx = (self.head + np.arange(self.filled)) % self.lp
        return self.ns[idx].copy(), self.nf[idx].copy()


@dataclass
class SourcePool:
    """A task's learned source-choice probabilities and focus flag."""

    p: np.ndarray
    is_focus: bool = False

    @classmethod
    def uniform(cls, k: int) -> "SourcePool":
        return cls(p=np.full(k, 1.0 / k))


def update_probabilities(mem: MemoryWindow, bp: float, eps: float) -> np.ndarray:
    """Choice probabilities from windowed success rates.

    Each source's rate is successes / (successes + failures + eps) plus the
    floor bp; probabilities are the normalized rates.
    """
    if bp < 0 or eps <= 0:
        raise ValueError("bp must be >= 0 and eps > 0")
    if mem.filled == 0:
        raise EmptyWindowError("probability update requires at least one stored generation")
    ns = mem.success_sums().astype(float)
    nf = mem.failure_sums().astype(float)
    sr = ns / (ns + nf + eps) + bp
    return sr / sr.sum()


def check_focus(mem: MemoryWindow) -> bool:
    """True when no success was recorded in any stored generation."""
    if mem.filled == 0:
        return False
    return bool(mem.success_sums().sum() == 0)


def roulette_select(p: np.ndarray, u: float) -> int:
    """Smallest index whose cumulative probability exceeds u."""
    cum = np.cumsum(p)
    return int(min(np.searchsorted(cum, u, side="right"), len(p) - 1))


def roulette_select_many(p: np.ndarray, us: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p)
    return np.minimum(np.searchsorted(cum, us, side="right"), len(p) - 1)


def choose_source(pool: SourcePool, own_index: int, u: float) -> int:
    """The knowledge source for one individual: itself under focus search,
    otherwise a roulette draw over the pool's probabilities."""
    if pool.is_focus:
        return own_index
    return roulette_select(pool.p, u)
