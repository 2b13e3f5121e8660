"""Block-reward allocation rules.

A configuration is a tuple of positive per-miner hash rates; an allocation
rule maps it to a same-length tuple of expected rewards in [0, 1].  Rules
come in two reward semantics:

* randomized - the allocation entries are winner-take-all probabilities
  (at most one miner receives the whole unit reward per epoch);
* deterministic - each entry is a fractional reward paid with certainty.

Rewards are kept as exact ``fractions.Fraction`` values wherever the rule
is rational-valued (everything except the square-root rule) so that axiom
checks can compare exactly; floats appear only for irrational rules and in
reports.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputError, InvalidLotteryError, SpecError

RANDOMIZED = "randomized"
DETERMINISTIC = "deterministic"
SEMANTICS = (RANDOMIZED, DETERMINISTIC)

#: Budget comparisons use this absolute tolerance when floats are involved.
BUDGET_TOLERANCE = 1e-12

Rate = "int | Fraction"
Reward = "Fraction | float"


@dataclass(frozen=True)
class Configuration:
    """Ordered tuple of positive integer hash rates, one per miner."""

    rates: tuple[int, ...]

    def __post_init__(self):
        if len(self.rates) == 0:
            raise InputError("configuration must contain at least one miner")
        for r in self.rates:
            if not isinstance(r, int) or isinstance(r, bool) or r < 1:
                raise InputError(f"hash rates must be positive integers, got {r!r}")

    @classmethod
    def of(cls, *rates: int) -> "Configuration":
        return cls(tuple(rates))

    @property
    def n(self) -> int:
        return len(self.rates)

    @property
    def total(self) -> int:
        return sum(self.rates)

    def sorted_rep(self) -> tuple[int, ...]:
        """Canonical representative: rates sorted in descending order."""
        return tuple(sorted(self.rates, reverse=True))

    def permuted(self, perm: Sequence[int]) -> "Configuration":
        return Configuration(tuple(self.rates[j] for j in perm))

    def __iter__(self):
        return iter(self.rates)

    def __len__(self):
        return len(self.rates)


def as_rates(h) -> tuple:
    """Normalize a Configuration or sequence of positive rationals to a tuple.

    Rules evaluate on arbitrary positive rational rates (the simulator feeds
    fractional hash-rate estimates); the integral Configuration type is the
    domain of the axiom universes.
    """
    rates = tuple(h.rates) if isinstance(h, Configuration) else tuple(h)
    if len(rates) == 0:
        raise InputError("configuration must contain at least one miner")
    for r in rates:
        if isinstance(r, bool) or not isinstance(r, (int, Fraction)):
            raise InputError(f"hash rates must be positive integers or fractions, got {r!r}")
        if r <= 0:
            raise InputError(f"hash rates must be positive, got {r!r}")
    return rates


def _parse_fraction(token: str, position: int = 0) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise SpecError("expected a number", token=token, position=position) from None


def _frac_str(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    return repr(float(v))


class ScalingFunction:
    """Nondecreasing map from total hash rate to a factor in [0, 1].

    Stored either as a named closed form (constant, step) or as an explicit
    finite table; the table form is only defined at its listed totals.
    """

    def __init__(self, kind: str, args: tuple):
        self.kind = kind
        self.args = args
        self._validate()

    @staticmethod
    def constant(value) -> "ScalingFunction":
        return ScalingFunction("const", (Fraction(value),))

    @staticmethod
    def step(threshold: int, low, high) -> "ScalingFunction":
        return ScalingFunction("step", (int(threshold), Fraction(low), Fraction(high)))

    @staticmethod
    def from_table(values: Mapping[int, "Fraction | str | float"]) -> "ScalingFunction":
        items = tuple(sorted((int(m), Fraction(v)) for m, v in values.items()))
        return ScalingFunction("table", items)

    def _validate(self):
        for v in self._values():
            if not 0 <= v <= 1:
                raise InputError(f"scaling values must lie in [0, 1], got {_frac_str(v)}")
        if self.kind == "const":
            pass
        elif self.kind == "step":
            threshold, low, high = self.args
            if threshold < 1:
                raise InputError("step threshold must be a positive total hash rate")
            if low > high:
                raise InputError("step scaling must be nondecreasing (low <= high)")
        elif self.kind == "table":
            if not self.args:
                raise InputError("table scaling needs at least one entry")
            for (m1, v1), (m2, v2) in zip(self.args, self.args[1:]):
                if v1 > v2:
                    raise InputError(
                        f"scaling must be nondecreasing: c({m1})={_frac_str(v1)} > c({m2})={_frac_str(v2)}"
                    )
        else:
            raise InputError(f"unknown scaling kind {self.kind!r}")

    def _values(self) -> Iterable[Fraction]:
        if self.kind == "const":
            return (self.args[0],)
        if self.kind == "step":
            return (self.args[1], self.args[2])
        return tuple(v for _, v in self.args)

    def value_at(self, m: int) -> Fraction:
        if m < 1:
            raise DomainError(f"total hash rate must be positive, got {m}")
        if self.kind == "const":
            return self.args[0]
        if self.kind == "step":
            threshold, low, high = self.args
            return low if m < threshold else high
        for total, v in self.args:
            if total == m:
                return v
        raise DomainError(f"scaling value undefined at total hash rate {m}")

    def spec(self) -> str:
        if self.kind == "const":
            return f"const:{_frac_str(self.args[0])}"
        if self.kind == "step":
            threshold, low, high = self.args
            return f"step:{threshold}:{_frac_str(low)}:{_frac_str(high)}"
        body = ",".join(f"{m}={_frac_str(v)}" for m, v in self.args)
        return f"table:{body}"

    def __eq__(self, other):
        return isinstance(other, ScalingFunction) and (self.kind, self.args) == (other.kind, other.args)

    def __hash__(self):
        return hash((self.kind, self.args))

    def __repr__(self):
        return f"ScalingFunction({self.spec()!r})"


class AllocationRule:
    """Base class: a named, pure map from rate tuples to reward tuples."""

    kind = "abstract"

    def __init__(self, semantics: str = RANDOMIZED):
        if semantics not in SEMANTICS:
            raise InputError(f"semantics must be one of {SEMANTICS}, got {semantics!r}")
        self.semantics = semantics

    # subclasses implement the raw allocation on validated rates
    def values(self, rates: tuple) -> tuple:
        raise NotImplementedError

    def domain_contains(self, rates: tuple) -> bool:
        """Whether the rule is defined at this rate tuple (total rules: always)."""
        return True

    def spec(self) -> str:
        raise NotImplementedError

    @property
    def name(self) -> str:
        return self.spec()

    def _key(self):
        return (self.kind, self.spec(), self.semantics)

    def __eq__(self, other):
        return isinstance(other, AllocationRule) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()} ({self.semantics})>"

    def with_semantics(self, semantics: str) -> "AllocationRule":
        if semantics == self.semantics:
            return self
        clone = self.__class__.__new__(self.__class__)
        clone.__dict__.update(self.__dict__)
        clone.semantics = semantics
        return clone

    def to_dict(self) -> dict:
        return {"spec": self.spec(), "semantics": self.semantics}


class Proportional(AllocationRule):
    """Bitcoin's rule: miner i expects h_i over the total hash rate."""

    kind = "proportional"

    def values(self, rates):
        total = sum(rates)
        return tuple(Fraction(r) / total for r in rates)

    def spec(self):
        return "proportional"


class AllZero(AllocationRule):
    """Pays nothing to anyone; weakly budget-balanced by a wide margin."""

    kind = "allzero"

    def values(self, rates):
        return tuple(Fraction(0) for _ in rates)

    def spec(self):
        return "allzero"


class GeneralizedProportional(AllocationRule):
    """Proportional scaled by a nondecreasing function of the total rate."""

    kind = "genprop"

    def __init__(self, scaling: ScalingFunction, semantics: str = RANDOMIZED):
        super().__init__(semantics)
        self.scaling = scaling

    def values(self, rates):
        total = sum(rates)
        if isinstance(total, Fraction):
            if total.denominator != 1:
                raise DomainError(
                    f"scaling is defined on integer totals; got total {total}"
                )
            total = total.numerator
        c = self.scaling.value_at(total)
        return tuple(c * Fraction(r) / total for r in rates)

    def domain_contains(self, rates):
        total = sum(rates)
        if isinstance(total, Fraction):
            if total.denominator != 1:
                return False
            total = total.numerator
        try:
            self.scaling.value_at(total)
        except DomainError:
            return False
        return True

    def spec(self):
        return f"genprop:{self.scaling.spec()}"


class ProportionalToSquares(AllocationRule):
    """Weights miners by the square of their hash rate."""

    kind = "squares"

    def values(self, rates):
        weights = [Fraction(r) ** 2 for r in rates]
        total = sum(weights)
        return tuple(w / total for w in weights)

    def spec(self):
        return "squares"


class ProportionalToSquareRoots(AllocationRule):
    """Weights miners by the square root of their hash rate (float-valued)."""

    kind = "sqrts"

    def values(self, rates):
        weights = [math.sqrt(float(r)) for r in rates]
        total = sum(weights)
        return tuple(w / total for w in weights)

    def spec(self):
        return "sqrts"


class HalfThreshold(AllocationRule):
    """Proportional, except a strict-majority miner starves everyone else.

    A miner holding exactly half the total does not trigger the cutoff; the
    rule then agrees with the proportional rule.
    """

    kind = "halfthreshold"

    def values(self, rates):
        total = sum(rates)
        for i, r in enumerate(rates):
            if 2 * r > total:
                return tuple(
                    Fraction(r) / total if j == i else Fraction(0)
                    for j in range(len(rates))
                )
        return tuple(Fraction(r) / total for r in rates)

    def spec(self):
        return "halfthreshold"


class TabulatedRule(AllocationRule):
    """Symmetric rule given by an explicit table over sorted representatives.

    The table maps each descending-sorted rate tuple to an allocation aligned
    with it; evaluation on an arbitrary ordering permutes the stored entry
    back.  Equal rates must receive equal rewards (otherwise the symmetric
    extension would not be a function), which the constructor enforces.
    """

    kind = "tabulated"

    def __init__(self, entries: Mapping[tuple[int, ...], Sequence], grid: int | None = None,
                 semantics: str = RANDOMIZED, label: str | None = None):
        super().__init__(semantics)
        normalized = {}
        for rep, alloc in entries.items():
            rep = tuple(int(r) for r in rep)
            if tuple(sorted(rep, reverse=True)) != rep:
                raise InputError(f"table keys must be descending-sorted tuples, got {rep}")
            alloc = tuple(Fraction(a) for a in alloc)
            if len(alloc) != len(rep):
                raise InputError(f"allocation length mismatch for {rep}")
            for a in alloc:
                if a < 0:
                    raise InputError(f"allocations must be nonnegative, got {_frac_str(a)}")
            for i in range(len(rep) - 1):
                if rep[i] == rep[i + 1] and alloc[i] != alloc[i + 1]:
                    raise InputError(
                        f"equal rates must receive equal rewards in a symmetric table: {rep} -> {alloc}"
                    )
            normalized[rep] = alloc
        self._items = tuple(sorted(normalized.items()))
        self.entries = dict(self._items)
        self.grid = grid
        self.label = label

    def values(self, rates):
        ints = []
        for r in rates:
            if isinstance(r, Fraction):
                if r.denominator != 1:
                    raise DomainError(f"tabulated rule is defined on integer rates, got {r}")
                r = r.numerator
            ints.append(int(r))
        key = tuple(sorted(ints, reverse=True))
        if key not in self.entries:
            raise DomainError(f"configuration {tuple(ints)} is outside the tabulated universe")
        stored = self.entries[key]
        # stable match of original positions onto sorted slots; ties carry
        # equal rewards so the choice of slot does not matter
        order = sorted(range(len(ints)), key=lambda j: (-ints[j], j))
        out = [Fraction(0)] * len(ints)
        for slot, j in enumerate(order):
            out[j] = stored[slot]
        return tuple(out)

    def domain_contains(self, rates):
        ints = []
        for r in rates:
            if isinstance(r, Fraction):
                if r.denominator != 1:
                    return False
                r = r.numerator
            if not isinstance(r, int):
                return False
            ints.append(r)
        return tuple(sorted(ints, reverse=True)) in self.entries

    def max_total(self) -> int:
        return max(sum(rep) for rep in self.entries)

    def max_miners(self) -> int:
        return max(len(rep) for rep in self.entries)

    def spec(self):
        if self.label:
            return self.label
        body = ";".join(
            ",".join(map(str, rep)) + "=" + "|".join(_frac_str(a) for a in alloc)
            for rep, alloc in self._items
        )
        return f"tabulated:{body}"

    def _key(self):
        return (self.kind, self._items, self.semantics)

    def to_dict(self):
        return {
            "kind": "tabulated",
            "semantics": self.semantics,
            "grid": self.grid,
            "label": self.label,
            "entries": {
                ",".join(map(str, rep)): [_frac_str(a) for a in alloc]
                for rep, alloc in self._items
            },
        }


def evaluate(rule: AllocationRule, h) -> tuple:
    """Apply a rule to a configuration, returning the reward tuple.

    Raises DomainError when the rule is undefined at the configuration and
    InputError for malformed configurations.
    """
    rates = as_rates(h)
    return rule.values(rates)


def allocation_total(alloc: Sequence) -> "Fraction | float":
    exact = all(isinstance(a, (int, Fraction)) for a in alloc)
    return sum(alloc) if exact else math.fsum(float(a) for a in alloc)


def draw_reward(rule: AllocationRule, h, rng_seed: int) -> list:
    """Realize one epoch of rewards under the rule's semantics.

    Randomized semantics runs a winner-take-all lottery with the allocation
    as the probability vector (with probability 1 - sum nobody is paid);
    deterministic semantics pays the allocation itself.  Reproducible for a
    fixed seed.
    """
    alloc = evaluate(rule, h)
    if rule.semantics == DETERMINISTIC:
        return list(alloc)
    total = allocation_total(alloc)
    if isinstance(total, Fraction):
        overshoot = total > 1
    else:
        overshoot = total > 1 + BUDGET_TOLERANCE
    if overshoot:
        raise InvalidLotteryError(
            f"allocation sums to {float(total)} > 1; not a valid winner lottery"
        )
    u = random.Random(rng_seed).random()
    acc = 0.0
    winner = None
    for i, a in enumerate(alloc):
        acc += float(a)
        if u < acc:
            winner = i
            break
    return [1.0 if i == winner else 0.0 for i in range(len(alloc))]


# ---------------------------------------------------------------------------
# catalog

AXIOM_IDS = ("A1", "A2a", "A2b", "A3", "A4a", "A4b", "A4c")


@dataclass(frozen=True)
class CatalogEntry:
    """A catalog rule together with its claimed pass/fail per axiom.

    Claims left out of the mapping are unstated; the axiom engine only
    cross-checks axioms that carry a claim.
    """

    rule: AllocationRule
    claims: Mapping[str, bool]


def default_step_scaling() -> ScalingFunction:
    return ScalingFunction.step(5, Fraction(1, 4), Fraction(3, 4))


def catalog() -> list[CatalogEntry]:
    """The six rule kinds with their documented axiom claims.

    The generalized proportional rule appears twice (a constant and a step
    scaling) so both regimes are exercised.  Collusion grades are ordered
    A4a strongest to A4c weakest, so a pass at A4a implies passes below it
    and a failure at A4c implies failures above it; implied claims are
    spelled out.
    """
    entries = []
    entries.append(CatalogEntry(Proportional(), {
        "A1": True, "A2a": True, "A2b": True, "A3": True,
        "A4a": True, "A4b": True, "A4c": True,
    }))
    entries.append(CatalogEntry(AllZero(), {
        "A1": True, "A2a": False, "A2b": True, "A3": True,
        "A4a": True, "A4b": True, "A4c": True,
    }))
    for scaling in (ScalingFunction.constant(Fraction(1, 2)), default_step_scaling()):
        strong = set(scaling._values()) == {Fraction(1)}
        entries.append(CatalogEntry(GeneralizedProportional(scaling), {
            "A1": True, "A2a": strong, "A2b": True, "A3": True,
            "A4a": True, "A4b": True, "A4c": True,
        }))
    entries.append(CatalogEntry(ProportionalToSquares(), {
        "A1": True, "A2a": True, "A2b": True, "A3": True,
        "A4a": False, "A4b": False, "A4c": False,
    }))
    entries.append(CatalogEntry(ProportionalToSquareRoots(), {
        "A1": True, "A2a": True, "A2b": True, "A3": False,
        "A4a": True, "A4b": True, "A4c": True,
    }))
    entries.append(CatalogEntry(HalfThreshold(), {
        "A1": True, "A2a": False, "A2b": True, "A3": True,
        "A4a": False, "A4b": False, "A4c": True,
    }))
    return entries


def catalog_rules() -> list[AllocationRule]:
    return [entry.rule for entry in catalog()]


# ---------------------------------------------------------------------------
# rule spec grammar:
#   proportional | allzero | squares | sqrts | halfthreshold | genprop:<c-spec>
#   <c-spec> := const:<v> | step:<m0>:<lo>:<hi> | table:<m1>=<v1>,...

_SIMPLE_RULES = {
    "proportional": Proportional,
    "allzero": AllZero,
    "squares": ProportionalToSquares,
    "sqrts": ProportionalToSquareRoots,
    "halfthreshold": HalfThreshold,
}


def parse_scaling_spec(text: str, offset: int = 0) -> ScalingFunction:
    parts = text.split(":")
    head = parts[0]
    if head == "const":
        if len(parts) != 2:
            raise SpecError("const scaling takes one value", token=text, position=offset)
        return ScalingFunction.constant(_parse_fraction(parts[1], offset + len("const:")))
    if head == "step":
        if len(parts) != 4:
            raise SpecError("step scaling takes threshold:low:high", token=text, position=offset)
        try:
            threshold = int(parts[1])
        except ValueError:
            raise SpecError("step threshold must be an integer", token=parts[1],
                            position=offset + len("step:")) from None
        pos = offset + len(f"step:{parts[1]}:")
        low = _parse_fraction(parts[2], pos)
        high = _parse_fraction(parts[3], pos + len(parts[2]) + 1)
        return ScalingFunction.step(threshold, low, high)
    if head == "table":
        if len(parts) != 2 or not parts[1]:
            raise SpecError("table scaling takes m=v pairs", token=text, position=offset)
        values = {}
        pos = offset + len("table:")
        for item in parts[1].split(","):
            if "=" not in item:
                raise SpecError("table entries look like m=v", token=item, position=pos)
            m_text, v_text = item.split("=", 1)
            try:
                m = int(m_text)
            except ValueError:
                raise SpecError("table key must be an integer total", token=m_text,
                                position=pos) from None
            values[m] = _parse_fraction(v_text, pos + len(m_text) + 1)
            pos += len(item) + 1
        return ScalingFunction.from_table(values)
    raise SpecError("unknown scaling kind", token=head, position=offset)


def parse_rule_spec(text: str, semantics: str = RANDOMIZED) -> AllocationRule:
    """Parse the CLI rule grammar into a rule instance."""
    text = text.strip()
    if text in _SIMPLE_RULES:
        return _SIMPLE_RULES[text](semantics=semantics)
    if text.startswith("genprop:"):
        scaling = parse_scaling_spec(text[len("genprop:"):], offset=len("genprop:"))
        return GeneralizedProportional(scaling, semantics=semantics)
    head = text.split(":", 1)[0]
    raise SpecError("unknown rule", token=head, position=0)


def rule_from_dict(data: Mapping) -> AllocationRule:
    """Reconstruct a rule from its to_dict() form (closed-form or tabulated)."""
    semantics = data.get("semantics", RANDOMIZED)
    if data.get("kind") == "tabulated" or "entries" in data:
        entries = {
            tuple(int(x) for x in key.split(",")): [Fraction(v) for v in alloc]
            for key, alloc in data["entries"].items()
        }
        return TabulatedRule(entries, grid=data.get("grid"), semantics=semantics,
                             label=data.get("label"))
    return parse_rule_spec(data["spec"], semantics=semantics)
