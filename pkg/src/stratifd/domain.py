"""Integer domains as canonical ordered interval sets.

Domains are immutable values: every operation returns a new domain.  A bound
is either a plain int or one of the symbolic infinities ``NEG_INF`` /
``POS_INF``, which compare below / above every integer.  The canonical form
keeps intervals sorted, disjoint and non-adjacent (a gap of one is merged),
so two domains denote the same set of integers exactly when they compare
equal.
"""

from __future__ import annotations

from typing import Iterable, Iterator


class EmptyDomainError(Exception):
    """An operation needed a nonempty domain.

    This is a caller mistake, distinct from solver failure (which is an
    ordinary empty-domain value, not an exception).
    """


class _Inf:
    """Symbolic infinite bound; only the two module-level instances exist."""

    __slots__ = ("_neg",)

    def __init__(self, neg: bool) -> None:
        self._neg = neg

    def __repr__(self) -> str:
        return "-inf" if self._neg else "+inf"

    def __neg__(self) -> "_Inf":
        return POS_INF if self._neg else NEG_INF

    # Total order: NEG_INF < every int < POS_INF.  Reflected comparisons make
    # mixed int/_Inf comparisons work in either direction.
    def __lt__(self, other: object) -> bool:
        if isinstance(other, int):
            return self._neg
        if isinstance(other, _Inf):
            return self._neg and not other._neg
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if isinstance(other, int):
            return not self._neg
        if isinstance(other, _Inf):
            return other._neg and not self._neg
        return NotImplemented

    def __le__(self, other: object) -> bool:
        if isinstance(other, (int, _Inf)):
            return not (self > other)
        return NotImplemented

    def __ge__(self, other: object) -> bool:
        if isinstance(other, (int, _Inf)):
            return not (self < other)
        return NotImplemented

    def __copy__(self) -> "_Inf":
        return self

    def __deepcopy__(self, memo: dict) -> "_Inf":
        return self


NEG_INF = _Inf(True)
POS_INF = _Inf(False)

Bound = int | _Inf
Interval = tuple[Bound, Bound]


def is_finite(b: Bound) -> bool:
    return not isinstance(b, _Inf)


def bound_add(a: Bound, b: Bound) -> Bound:
    """Saturating addition; adding opposite infinities is a caller bug."""
    if isinstance(a, _Inf):
        if isinstance(b, _Inf) and b is not a:
            raise ValueError("cannot add opposite infinities")
        return a
    if isinstance(b, _Inf):
        return b
    return a + b


def bound_sub(a: Bound, b: Bound) -> Bound:
    return bound_add(a, -b)


def bound_mul(a: Bound, b: Bound) -> Bound:
    """Saturating multiplication with the convention 0 * inf = 0."""
    if a == 0 or b == 0:
        return 0
    if isinstance(a, _Inf) or isinstance(b, _Inf):
        negative = (a < 0) != (b < 0)
        return NEG_INF if negative else POS_INF
    return a * b


def bound_min(a: Bound, b: Bound) -> Bound:
    return a if a <= b else b


def bound_max(a: Bound, b: Bound) -> Bound:
    return a if a >= b else b


def _check_interval(lo: Bound, hi: Bound) -> None:
    if lo is POS_INF or hi is NEG_INF:
        raise ValueError(f"malformed interval ({lo!r}, {hi!r})")


def _normalize(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    items = []
    for lo, hi in intervals:
        _check_interval(lo, hi)
        if lo <= hi:
            items.append((lo, hi))
    items.sort()
    merged: list[Interval] = []
    for lo, hi in items:
        if merged:
            plo, phi = merged[-1]
            # overlapping or adjacent (gap of one) intervals collapse
            if lo <= bound_add(phi, 1):
                if hi > phi:
                    merged[-1] = (plo, hi)
                continue
        merged.append((lo, hi))
    return tuple(merged)


class IntDomain:
    """A set of integers stored as sorted, non-adjacent closed intervals."""

    __slots__ = ("ivs",)

    def __init__(self, intervals: Iterable[Interval] = ()) -> None:
        self.ivs: tuple[Interval, ...] = _normalize(intervals)

    @classmethod
    def range(cls, lo: Bound, hi: Bound) -> "IntDomain":
        """Single closed interval lo..hi; empty when lo > hi."""
        return cls(((lo, hi),))

    @classmethod
    def point(cls, v: int) -> "IntDomain":
        return cls(((v, v),))

    @classmethod
    def from_values(cls, values: Iterable[int]) -> "IntDomain":
        return cls((v, v) for v in values)

    # -- predicates ------------------------------------------------------

    def is_empty(self) -> bool:
        return not self.ivs

    def __bool__(self) -> bool:
        return bool(self.ivs)

    def is_singleton(self) -> bool:
        return len(self.ivs) == 1 and self.ivs[0][0] == self.ivs[0][1]

    def is_finite(self) -> bool:
        return self.is_empty() or (
            is_finite(self.ivs[0][0]) and is_finite(self.ivs[-1][1])
        )

    def __contains__(self, v: int) -> bool:
        return any(lo <= v <= hi for lo, hi in self.ivs)

    def issubset(self, other: "IntDomain") -> bool:
        return self.intersect(other) == self

    def validate(self) -> bool:
        """Check canonical form; raises ValueError when violated."""
        prev_hi: Bound | None = None
        for lo, hi in self.ivs:
            _check_interval(lo, hi)
            if lo > hi:
                raise ValueError(f"inverted interval ({lo!r}, {hi!r})")
            if prev_hi is not None:
                if prev_hi is POS_INF or lo is NEG_INF:
                    raise ValueError("infinite bound in interior position")
                if lo <= prev_hi + 1:
                    raise ValueError(
                        f"intervals overlap or touch at ({lo!r}, {hi!r})"
                    )
            prev_hi = hi
        return True

    # -- accessors -------------------------------------------------------

    def bounds(self) -> tuple[Bound, Bound]:
        if not self.ivs:
            raise EmptyDomainError("bounds of empty domain")
        return self.ivs[0][0], self.ivs[-1][1]

    def hull(self) -> "IntDomain":
        """Smallest single interval containing the domain."""
        if not self.ivs:
            return self
        lo, hi = self.bounds()
        return IntDomain.range(lo, hi)

    def size(self) -> Bound:
        """Number of values, or POS_INF for an unbounded domain."""
        total = 0
        for lo, hi in self.ivs:
            if not (is_finite(lo) and is_finite(hi)):
                return POS_INF
            total += hi - lo + 1
        return total

    def value(self) -> int:
        """The sole value of a singleton domain."""
        if not self.is_singleton():
            raise EmptyDomainError("value() on non-singleton domain")
        v = self.ivs[0][0]
        assert isinstance(v, int)
        return v

    def values(self) -> Iterator[int]:
        """Iterate values in ascending order; finite domains only."""
        if not self.is_finite():
            raise EmptyDomainError("cannot enumerate an unbounded domain")
        for lo, hi in self.ivs:
            yield from range(lo, hi + 1)  # type: ignore[arg-type]

    # -- algebra ---------------------------------------------------------

    def union(self, other: "IntDomain") -> "IntDomain":
        return IntDomain(self.ivs + other.ivs)

    def intersect(self, other: "IntDomain") -> "IntDomain":
        out: list[Interval] = []
        a, b = self.ivs, other.ivs
        i = j = 0
        while i < len(a) and j < len(b):
            lo = bound_max(a[i][0], b[j][0])
            hi = bound_min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] <= b[j][1]:
                i += 1
            else:
                j += 1
        return IntDomain(out)

    def complement(self) -> "IntDomain":
        """Set complement over inf..sup."""
        out: list[Interval] = []
        edge: Bound | None = NEG_INF
        for lo, hi in self.ivs:
            if lo is not NEG_INF:
                out.append((edge, lo - 1))  # type: ignore[operator]
            edge = None if hi is POS_INF else hi + 1  # type: ignore[operator]
        if edge is not None:
            out.append((edge, POS_INF))
        return IntDomain(out)

    def difference(self, other: "IntDomain") -> "IntDomain":
        return self.intersect(other.complement())

    def without(self, v: int) -> "IntDomain":
        return self.difference(IntDomain.point(v))

    def shift(self, delta: int) -> "IntDomain":
        """Pointwise translation; infinite bounds stay put."""
        return IntDomain(
            (bound_add(lo, delta), bound_add(hi, delta)) for lo, hi in self.ivs
        )

    def clamp(self, lo: Bound, hi: Bound) -> "IntDomain":
        """Intersection with the single interval lo..hi."""
        return self.intersect(IntDomain.range(lo, hi))

    __or__ = union
    __and__ = intersect

    # -- value semantics -------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntDomain):
            return NotImplemented
        return self.ivs == other.ivs

    def __hash__(self) -> int:
        return hash(self.ivs)

    def __repr__(self) -> str:
        if not self.ivs:
            return "IntDomain(empty)"
        parts = []
        for lo, hi in self.ivs:
            parts.append(f"{lo}" if lo == hi else f"{lo}..{hi}")
        return f"IntDomain({' | '.join(parts)})"


EMPTY = IntDomain()
FULL = IntDomain.range(NEG_INF, POS_INF)
