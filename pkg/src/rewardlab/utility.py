"""von Neumann-Morgenstern utilities over block rewards in [0, 1].

Every utility is strictly increasing with U(0) = 0, tagged linear,
strictly-concave (risk-averse) or strictly-convex (risk-seeking).  Values
are exact fractions whenever closed-form exact arithmetic exists (integer
powers, rational roots that happen to be rational, piecewise-linear
interpolation) and floats otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, InputError, SpecError
from .rules import DETERMINISTIC, AllocationRule, evaluate
from .deviations import CoalitionMerge, SharingScheme

LINEAR = "linear"
CONCAVE = "strictly-concave"
CONVEX = "strictly-convex"


def _check_reward(p):
    if not 0 <= p <= 1:
        raise DomainError(f"rewards live in [0, 1], got {p!r}")


def _exact_root(value: int, degree: int) -> int | None:
    """Integer ``degree``-th root of ``value`` if one exists, else None."""
    if value < 0:
        return None
    if value in (0, 1):
        return value
    root = round(value ** (1.0 / degree))
    for candidate in (root - 1, root, root + 1):
        if candidate >= 0 and candidate ** degree == value:
            return candidate
    return None


class UtilityFunction:
    shape = LINEAR

    def __call__(self, p):
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def _key(self):
        return (type(self).__name__, self.spec())

    def __eq__(self, other):
        return isinstance(other, UtilityFunction) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()} ({self.shape})>"


class PowerUtility(UtilityFunction):
    """U(p) = p ** alpha; concave below alpha = 1, convex above."""

    def __init__(self, alpha):
        alpha = Fraction(alpha)
        if alpha <= 0:
            raise InputError("power utilities need alpha > 0 to be strictly increasing")
        self.alpha = alpha

    @property
    def shape(self):
        if self.alpha == 1:
            return LINEAR
        return CONCAVE if self.alpha < 1 else CONVEX

    def __call__(self, p):
        _check_reward(p)
        if isinstance(p, (int, Fraction)) and not isinstance(p, bool):
            p = Fraction(p)
            if self.alpha.denominator == 1:
                return p ** self.alpha.numerator
            num = _exact_root(p.numerator, self.alpha.denominator)
            den = _exact_root(p.denominator, self.alpha.denominator)
            if num is not None and den is not None:
                return Fraction(num, den) ** self.alpha.numerator
        return float(p) ** float(self.alpha)

    def spec(self):
        a = self.alpha
        text = str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"
        return f"power:{text}"


class PiecewiseLinearUtility(UtilityFunction):
    """Linear interpolation through (0, 0) and the given knots up to p = 1.

    The knot slopes must be positive and monotone in one direction; the
    direction fixes the shape tag.  Twice-differentiability is not required,
    shape is enforced through the discrete slope pattern instead.
    """

    def __init__(self, knots):
        pts = sorted((Fraction(p), Fraction(u)) for p, u in knots)
        if not pts or pts[-1][0] != 1:
            raise InputError("piecewise-linear utilities need a knot at p = 1")
        if pts[0][0] == 0:
            if pts[0][1] != 0:
                raise InputError("utilities are anchored at U(0) = 0")
        else:
            pts = [(Fraction(0), Fraction(0))] + pts
        for (p1, u1), (p2, u2) in zip(pts, pts[1:]):
            if p2 <= p1:
                raise InputError("knot rewards must be strictly increasing")
            if u2 <= u1:
                raise InputError("utilities must be strictly increasing")
        slopes = [(u2 - u1) / (p2 - p1) for (p1, u1), (p2, u2) in zip(pts, pts[1:])]
        if all(a == b for a, b in zip(slopes, slopes[1:])):
            self.shape_tag = LINEAR
        elif all(a > b for a, b in zip(slopes, slopes[1:])):
            self.shape_tag = CONCAVE
        elif all(a < b for a, b in zip(slopes, slopes[1:])):
            self.shape_tag = CONVEX
        else:
            raise InputError("knot slopes must be monotone (concave, convex or linear)")
        self.knots = tuple(pts)

    @property
    def shape(self):
        return self.shape_tag

    def __call__(self, p):
        _check_reward(p)
        exact = isinstance(p, (int, Fraction)) and not isinstance(p, bool)
        x = Fraction(p) if exact else Fraction(float(p))
        for (p1, u1), (p2, u2) in zip(self.knots, self.knots[1:]):
            if p1 <= x <= p2:
                value = u1 + (u2 - u1) * (x - p1) / (p2 - p1)
                return value if exact else float(value)
        raise DomainError(f"reward {p!r} outside the knot range")

    def spec(self):
        body = ",".join(
            f"{_frac_text(p)}={_frac_text(u)}" for p, u in self.knots if p != 0
        )
        return f"pwl:{body}"


def _frac_text(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


#: Spans both the risk-averse and risk-seeking regimes with few parameters.
DEFAULT_UTILITY_ALPHAS = (
    Fraction(1, 2), Fraction(9, 10), Fraction(1), Fraction(11, 10), Fraction(2),
)


def default_utility_set() -> list[PowerUtility]:
    return [PowerUtility(a) for a in DEFAULT_UTILITY_ALPHAS]


@dataclass(frozen=True)
class RewardLottery:
    """Finite-support distribution over rewards in [0, 1]."""

    outcomes: tuple[tuple, ...]

    def __post_init__(self):
        if not self.outcomes:
            raise InputError("a lottery needs at least one outcome")
        total = 0
        for reward, prob in self.outcomes:
            _check_reward(reward)
            if prob < 0:
                raise InputError("probabilities must be nonnegative")
            total += prob
        exact = isinstance(total, (int, Fraction))
        if (exact and total != 1) or (not exact and abs(float(total) - 1.0) > 1e-12):
            raise InputError(f"probabilities must sum to 1, got {float(total)}")

    @classmethod
    def of(cls, *outcomes) -> "RewardLottery":
        return cls(tuple((r, p) for r, p in outcomes))

    def expected_reward(self):
        return sum(r * p for r, p in self.outcomes)


def expected_utility(utility: UtilityFunction, lottery: RewardLottery):
    return sum(p * utility(r) for r, p in lottery.outcomes)


def jensen_gap(utility: UtilityFunction, lottery: RewardLottery):
    """U(E[p]) - E[U(p)]: nonnegative for concave utilities, nonpositive for
    convex ones, zero for linear."""
    return utility(lottery.expected_reward()) - expected_utility(utility, lottery)


@dataclass(frozen=True)
class MemberUtility:
    member: int  # position inside the base configuration
    rate: int
    coalition_value: object
    baseline_value: object


def utilities_for(n: int, profile) -> list[UtilityFunction]:
    """Expand a utility profile to one function per miner position.

    A single function applies to everyone; a sequence is cycled when shorter
    than the configuration.
    """
    if isinstance(profile, UtilityFunction):
        return [profile] * n
    profile = list(profile)
    if not profile:
        raise InputError("empty utility profile")
    return [profile[i % len(profile)] for i in range(n)]


def coalition_member_utility(
    rule: AllocationRule,
    h,
    merge: CoalitionMerge,
    scheme: SharingScheme,
    utilities,
) -> list[MemberUtility]:
    """Expected utility of each coalition member inside vs outside the merge.

    Randomized semantics: the coalition wins the whole reward with the
    merged miner's probability and then splits it by the scheme, so member i
    gets x_star * E[U_i(r_i)] against a solo baseline of U_i(1) * x_i.
    Deterministic semantics: the merged reward x_star itself is split, so
    member i gets E[U_i(x_star * r_i)] against U_i(x_i).
    """
    base_alloc = evaluate(rule, merge.base)
    derived_alloc = evaluate(rule, merge.derived())
    x_star = derived_alloc[merge.merged_position()]
    member_rates = merge.member_rates()
    funcs = utilities_for(merge.base.n, utilities)
    dists = scheme.reward_distributions(member_rates)
    out = []
    for member, rate, dist in zip(merge.members, member_rates, dists):
        u = funcs[member]
        if rule.semantics == DETERMINISTIC:
            coalition = sum(prob * u(x_star * amount) for amount, prob in dist)
            baseline = u(base_alloc[member])
        else:
            coalition = x_star * sum(prob * u(amount) for amount, prob in dist)
            baseline = u(1) * base_alloc[member]
        out.append(MemberUtility(member, rate, coalition, baseline))
    return out


# ---------------------------------------------------------------------------
# utility spec grammar:  power:<alpha> | pwl:<p1>=<u1>,...

def parse_utility_spec(text: str) -> UtilityFunction:
    text = text.strip()
    if text.startswith("power:"):
        body = text[len("power:"):]
        try:
            alpha = Fraction(body)
        except (ValueError, ZeroDivisionError):
            raise SpecError("expected a number for alpha", token=body,
                            position=len("power:")) from None
        return PowerUtility(alpha)
    if text.startswith("pwl:"):
        body = text[len("pwl:"):]
        if not body:
            raise SpecError("pwl utilities need knots", token=text, position=0)
        knots = []
        pos = len("pwl:")
        for item in body.split(","):
            if "=" not in item:
                raise SpecError("pwl knots look like p=u", token=item, position=pos)
            p_text, u_text = item.split("=", 1)
            try:
                knots.append((Fraction(p_text), Fraction(u_text)))
            except (ValueError, ZeroDivisionError):
                raise SpecError("expected numbers in knot", token=item, position=pos) from None
            pos += len(item) + 1
        return PiecewiseLinearUtility(knots)
    head = text.split(":", 1)[0]
    raise SpecError("unknown utility", token=head, position=0)


def parse_utility_profile(text: str) -> list[UtilityFunction]:
    """Semicolon-separated utility specs, one per miner position (cycled)."""
    specs = [s for s in text.split(";") if s]
    if not specs:
        raise SpecError("empty utility profile", token=text, position=0)
    return [parse_utility_spec(s) for s in specs]
