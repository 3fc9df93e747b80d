"""Residual reports shared by the identity verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IdentityEntry:
    """Outcome of checking one identity over all index tuples (or trials).

    ``residual`` is the largest absolute deviation; ``normalized`` divides each
    deviation by ``1 + scale`` of its own tuple before taking the maximum.
    """

    identity: str
    residual: float
    normalized: float
    worst_index: tuple
    passed: bool

    def to_dict(self):
        return {
            "identity": self.identity,
            "residual": self.residual,
            "normalized": self.normalized,
            "worst_index": list(self.worst_index),
            "passed": self.passed,
        }


@dataclass(frozen=True)
class IdentityReport:
    tol: float
    entries: tuple[IdentityEntry, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, identity: str) -> IdentityEntry:
        for e in self.entries:
            if e.identity == identity:
                return e
        raise KeyError(identity)

    def names(self):
        return [e.identity for e in self.entries]

    def merged(self, other: "IdentityReport") -> "IdentityReport":
        return IdentityReport(tol=self.tol, entries=self.entries + other.entries)

    def to_dict(self):
        return {
            "passed": self.passed,
            "tol": self.tol,
            "entries": [e.to_dict() for e in self.entries],
        }


def entry_from_residuals(identity, diff, tol, scale=0.0):
    """Build an :class:`IdentityEntry` from an array of deviations.

    ``diff`` holds the deviation per index tuple; ``scale`` broadcasts against
    it. The worst tuple is the first maximiser in C order, i.e. the
    lexicographically smallest among ties.
    """
    diff = np.abs(np.asarray(diff))
    if diff.size == 0:
        return IdentityEntry(identity, 0.0, 0.0, (), True)
    scale = np.broadcast_to(np.abs(np.asarray(scale, dtype=float)), diff.shape)
    norm = diff / (1.0 + scale)
    flat = int(np.argmax(norm))
    worst = tuple(int(i) for i in np.unravel_index(flat, diff.shape))
    normalized = float(norm.flat[flat])
    finite = bool(np.all(np.isfinite(diff)))
    return IdentityEntry(
        identity=identity,
        residual=float(diff.max()) if finite else float("inf"),
        normalized=normalized if finite else float("inf"),
        worst_index=worst,
        passed=finite and normalized < tol,
    )
