"""Deviations miners can attempt: sybil splits, coalition merges, sharing.

Enumeration order is part of the contract: checkers report the first
violating deviation they meet, and that choice must be stable across runs
and parallelism.  The canonical order is

* sybil splits - replaced total from h_i down to 1, partitions of each
  total largest-part-first (so rate 3 yields {3}, {2,1}, {1,1,1}, {2},
  {1,1}, {1});
* coalition merges - coalitions by (size, member positions), merged rate
  descending from the combined rate (the full-rate merge first).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

from .errors import InputError
from .rules import Configuration


def descending_partitions(total: int, max_part: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``total`` into positive parts, each part tuple descending,
    enumerated largest-first: 3 -> (3,), (2,1), (1,1,1)."""
    if total == 0:
        yield ()
        return
    if max_part is None or max_part > total:
        max_part = total
    for first in range(max_part, 0, -1):
        for rest in descending_partitions(total - first, first):
            yield (first,) + rest


@dataclass(frozen=True)
class SybilSplit:
    """Replace one miner by several identities with the same or less rate."""

    base: Configuration
    miner: int
    parts: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.miner < self.base.n:
            raise InputError(f"miner index {self.miner} out of range")
        if not self.parts or any(p < 1 for p in self.parts):
            raise InputError("sybil identities need positive rates")
        if sum(self.parts) > self.base.rates[self.miner]:
            raise InputError("sybil identities may not exceed the replaced rate")

    def derived(self) -> Configuration:
        rates = self.base.rates
        return Configuration(rates[: self.miner] + rates[self.miner + 1:] + self.parts)

    def sybil_positions(self) -> range:
        """Positions of the new identities inside the derived configuration."""
        start = self.base.n - 1
        return range(start, start + len(self.parts))

    def to_dict(self) -> dict:
        return {
            "kind": "sybil_split",
            "base": list(self.base.rates),
            "miner": self.miner,
            "parts": list(self.parts),
        }

    @staticmethod
    def from_dict(data) -> "SybilSplit":
        return SybilSplit(Configuration(tuple(data["base"])), data["miner"], tuple(data["parts"]))


def sybil_splits(h: Configuration, miner: int) -> Iterator[SybilSplit]:
    """All splits of one miner: one per multiset of positive rates summing
    to at most its hash rate.  The count for rate s is the partition-count
    sum P(1) + ... + P(s)."""
    rate = h.rates[miner]
    for total in range(rate, 0, -1):
        for parts in descending_partitions(total):
            yield SybilSplit(h, miner, parts)


@dataclass(frozen=True)
class CoalitionMerge:
    """Replace a set of miners by a single merged miner.

    The derived configuration drops the members in place and appends the
    merged miner at the end; for symmetric rules the placement is
    immaterial and this keeps witnesses canonical.
    """

    base: Configuration
    members: tuple[int, ...]
    merged_rate: int

    def __post_init__(self):
        if not self.members:
            raise InputError("coalition needs at least one member")
        if list(self.members) != sorted(set(self.members)):
            raise InputError("coalition members must be distinct sorted positions")
        if self.members[0] < 0 or self.members[-1] >= self.base.n:
            raise InputError("coalition member index out of range")
        if not 1 <= self.merged_rate <= self.coalition_total:
            raise InputError("merged rate must lie in [1, combined rate]")

    @property
    def coalition_total(self) -> int:
        return sum(self.base.rates[j] for j in self.members)

    def member_rates(self) -> tuple[int, ...]:
        return tuple(self.base.rates[j] for j in self.members)

    def derived(self) -> Configuration:
        members = set(self.members)
        kept = tuple(r for j, r in enumerate(self.base.rates) if j not in members)
        return Configuration(kept + (self.merged_rate,))

    def merged_position(self) -> int:
        return self.base.n - len(self.members)

    def to_dict(self) -> dict:
        return {
            "kind": "coalition_merge",
            "base": list(self.base.rates),
            "members": list(self.members),
            "merged_rate": self.merged_rate,
        }

    @staticmethod
    def from_dict(data) -> "CoalitionMerge":
        return CoalitionMerge(
            Configuration(tuple(data["base"])), tuple(data["members"]), data["merged_rate"]
        )


def coalition_merges(h: Configuration) -> Iterator[CoalitionMerge]:
    """All merges, coalitions of size one included (a lone miner shrinking
    its rate).  The merge count for a coalition equals its combined rate."""
    for size in range(1, h.n + 1):
        for members in combinations(range(h.n), size):
            combined = sum(h.rates[j] for j in members)
            for merged in range(combined, 0, -1):
                yield CoalitionMerge(h, members, merged)


# ---------------------------------------------------------------------------
# reward-sharing schemes inside a coalition
#
# A scheme assigns each member a random share of the block reward the
# coalition wins, with shares summing to at most one.  Three families are
# supported: proportional-to-rate (deterministic), fixed fractions, and a
# single-winner lottery among the members.


class SharingScheme:
    def reward_distributions(self, member_rates: Sequence[int]) -> tuple:
        """Per member, the distribution of its share as ((amount, prob), ...)."""
        raise NotImplementedError

    def label(self) -> str:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ProportionalSharing(SharingScheme):
    def reward_distributions(self, member_rates):
        combined = sum(member_rates)
        return tuple(((Fraction(r, combined), Fraction(1)),) for r in member_rates)

    def label(self):
        return "proportional"

    def to_dict(self):
        return {"scheme": "proportional"}


@dataclass(frozen=True)
class FixedFractions(SharingScheme):
    fractions: tuple[Fraction, ...]

    def __post_init__(self):
        if any(f < 0 for f in self.fractions):
            raise InputError("sharing fractions must be nonnegative")
        if sum(self.fractions) > 1:
            raise InputError("sharing fractions must sum to at most 1")

    def reward_distributions(self, member_rates):
        if len(member_rates) != len(self.fractions):
            raise InputError("one fraction per coalition member")
        return tuple(((f, Fraction(1)),) for f in self.fractions)

    def label(self):
        return "fixed:" + ",".join(str(f) for f in self.fractions)

    def to_dict(self):
        return {"scheme": "fixed", "fractions": [str(f) for f in self.fractions]}


@dataclass(frozen=True)
class WinnerLottery(SharingScheme):
    """One member takes the whole coalition reward, member j with prob q_j;
    with probability 1 - sum(q) nobody inside the coalition is paid."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if any(q < 0 for q in self.probs):
            raise InputError("lottery probabilities must be nonnegative")
        if sum(self.probs) > 1:
            raise InputError("lottery probabilities must sum to at most 1")

    def reward_distributions(self, member_rates):
        if len(member_rates) != len(self.probs):
            raise InputError("one probability per coalition member")
        return tuple(((Fraction(1), q), (Fraction(0), 1 - q)) for q in self.probs)

    def label(self):
        return "lottery:" + ",".join(str(q) for q in self.probs)

    def to_dict(self):
        return {"scheme": "lottery", "probs": [str(q) for q in self.probs]}


def scheme_from_dict(data) -> SharingScheme:
    kind = data["scheme"]
    if kind == "proportional":
        return ProportionalSharing()
    if kind == "fixed":
        return FixedFractions(tuple(Fraction(f) for f in data["fractions"]))
    if kind == "lottery":
        return WinnerLottery(tuple(Fraction(q) for q in data["probs"]))
    raise InputError(f"unknown sharing scheme {kind!r}")


def grid_vectors(k: int, denominator: int) -> Iterator[tuple[Fraction, ...]]:
    """All k-vectors with entries on the 1/denominator grid summing to <= 1."""
    def rec(remaining: int, slots: int):
        if slots == 1:
            for v in range(remaining + 1):
                yield (v,)
            return
        for v in range(remaining + 1):
            for rest in rec(remaining - v, slots - 1):
                yield (v,) + rest

    for raw in rec(denominator, k):
        yield tuple(Fraction(v, denominator) for v in raw)


def iter_fixed_fraction_schemes(k: int, denominator: int = 16) -> Iterator[FixedFractions]:
    for vec in grid_vectors(k, denominator):
        yield FixedFractions(vec)


def iter_winner_lotteries(k: int, denominator: int = 16) -> Iterator[WinnerLottery]:
    for vec in grid_vectors(k, denominator):
        yield WinnerLottery(vec)


def scheme_family_label(denominator: int = 16) -> str:
    return (
        f"fixed fractions on the 1/{denominator} grid"
        f" + proportional sharing + single-winner lotteries on the 1/{denominator} grid"
    )
