"""
Exponent data for the universal sequence space: the bijection r of the natural
numbers onto the rationals q >= 1 and bracket searches inside it.

r(1) = 1 and r(i) = 1 + cw(i - 1) for i >= 2, where cw is the Calkin-Wilf
enumeration of the positive rationals. Since x -> 1 + x maps the positive
rationals onto the rationals > 1, this is exactly the Calkin-Wilf sequence
filtered to values >= 1: 1, 2, 3/2, 3, 4/3, 5/2, 5/3, 4, ...
"""
import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from config.settings import ENUM_MAX_DEPTH, ENUM_MEMO_LIMIT
from utils.errors import BudgetExceededError, DomainError

logger = logging.getLogger(__name__)

SCHEME = "calkin-wilf-filtered"


@dataclass(frozen=True)
class Rational:
    """Reduced rational number >= 1 stored as an exact integer pair."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.numerator <= 0 or self.denominator <= 0:
            raise DomainError(f"{self} must have positive numerator and denominator")
        if gcd(self.numerator, self.denominator) != 1:
            raise DomainError(f"{self} is not in reduced form")
        if self.numerator < self.denominator:
            raise DomainError(f"{self} is smaller than 1")

    @classmethod
    def from_fraction(cls, value):
        value = Fraction(value)
        return cls(value.numerator, value.denominator)

    @property
    def fraction(self):
        return Fraction(self.numerator, self.denominator)

    def __float__(self):
        return self.numerator / self.denominator

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


def cw_pair(n):
    """Return the n-th Calkin-Wilf rational (1-based) as an integer pair.

    The binary digits of n after the leading 1 spell the path from the root
    1/1: a 0 moves to the left child a/(a+b), a 1 to the right child (a+b)/b.
    """
    a, b = 1, 1
    for bit in bin(n)[3:]:
        if bit == "1":
            a += b
        else:
            b += a
    return a, b


def cw_index(a, b):
    """Inverse of cw_pair: the 1-based Calkin-Wilf index of a/b (reduced)."""
    low, shift = 0, 0
    while (a, b) != (1, 1):
        if a < b:
            run = (b - 1) // a
            b -= run * a
        else:
            run = (a - 1) // b
            a -= run * b
            low |= ((1 << run) - 1) << shift
        shift += run
    return (1 << shift) | low


def _inside(a, b, intervals):
    for lo, hi in intervals:
        if a * lo.denominator >= lo.numerator * b and (
            hi is None or a * hi.denominator <= hi.numerator * b
        ):
            return True
    return False


def _merge(intervals):
    merged = []
    for lo, hi in sorted(intervals, key=lambda iv: iv[0]):
        if merged and (merged[-1][1] is None or lo <= merged[-1][1]):
            prev_lo, prev_hi = merged[-1]
            if prev_hi is not None and (hi is None or hi > prev_hi):
                merged[-1] = (prev_lo, hi)
        else:
            merged.append((lo, hi))
    return merged


def _preimage(intervals):
    """Values whose left or right Calkin-Wilf child lands in `intervals`."""
    out = []
    for lo, hi in intervals:
        # left children a/(a+b) = x/(1+x) fill (0, 1)
        if lo < 1:
            new_hi = None if hi is None or hi >= 1 else hi / (1 - hi)
            out.append((lo / (1 - lo), new_hi))
        # right children (a+b)/b = x+1 fill (1, inf)
        if hi is None or hi > 1:
            out.append((max(lo - 1, Fraction(0)), None if hi is None else hi - 1))
    return _merge(out)


class _Bracket:
    """Closed target interval for Calkin-Wilf values with its backward images.

    level(j) is the set of values x from which some sequence of exactly j
    child moves ends inside the target; it is a short union of intervals.
    """

    def __init__(self, lo, hi):
        self._levels = [[(lo, hi)]]

    def level(self, j):
        while len(self._levels) <= j:
            self._levels.append(_preimage(self._levels[-1]))
        return self._levels[j]

    def complete(self, a, b, remaining):
        """Lexicographically smallest completion of `remaining` moves from a/b."""
        bits = []
        for left in range(remaining - 1, -1, -1):
            if _inside(a, a + b, self.level(left)):
                b += a
                bits.append("0")
            else:
                a += b
                bits.append("1")
        return "".join(bits), (a, b)


class RationalEnum:
    """The enumeration r: N -> Q ∩ [1, inf) with a memoized prefix.

    Reads are safe from several threads; extending the memo and the bracket
    cache happens under a lock.
    """

    scheme = SCHEME

    def __init__(self, memo_limit=ENUM_MEMO_LIMIT, max_depth=ENUM_MAX_DEPTH):
        self.memo_limit = memo_limit
        self.max_depth = max_depth
        self._prefix = [Rational(1, 1)]
        self._values = {}
        self._brackets = {}
        self._lock = threading.Lock()

    def __call__(self, index):
        return self.rational(index)

    def rational(self, index):
        """Return r(index) as a Rational."""
        if index < 1:
            raise DomainError(f"index must be >= 1, got {index}")
        if index <= self.memo_limit:
            if index > len(self._prefix):
                self._extend(index)
            return self._prefix[index - 1]
        a, b = cw_pair(index - 1)
        return Rational(a + b, b)

    def value(self, index):
        """r(index) as a float; cached."""
        cached = self._values.get(index)
        if cached is None:
            cached = float(self.rational(index))
            self._values[index] = cached
        return cached

    def prefix(self, count):
        return [self.rational(i) for i in range(1, count + 1)]

    def index_of(self, q):
        """Position of a rational >= 1 in the enumeration."""
        if not isinstance(q, Rational):
            q = Rational.from_fraction(q)
        if q.numerator == q.denominator:
            return 1
        return cw_index(q.numerator - q.denominator, q.denominator) + 1

    def _extend(self, index):
        with self._lock:
            # successor x -> 1 / (2 floor(x) - x + 1) on the Calkin-Wilf sequence
            a, b = cw_pair(len(self._prefix) - 1) if len(self._prefix) > 1 else (0, 1)
            while len(self._prefix) < index:
                if a == 0:
                    a, b = 1, 1
                else:
                    a, b = b, (2 * (a // b) + 1) * b - a
                self._prefix.append(Rational(a + b, b))

    def _bracket(self, lo, hi):
        key = (lo, hi)
        bracket = self._brackets.get(key)
        if bracket is None:
            with self._lock:
                if len(self._brackets) > 512:
                    self._brackets.clear()
                bracket = self._brackets.setdefault(key, _Bracket(lo, hi))
        return bracket

    def find_index_above(self, target, delta, min_index=0):
        """
        Smallest index i > min_index with r(i) in [target, target + delta]

        Args:
            target: Lower end of the bracket, >= 1
            delta: Width of the bracket, > 0
            min_index: Strict lower bound for the returned index

        Returns:
            Tuple (index, Rational)
        """
        if not target >= 1:
            raise DomainError(f"target must be >= 1, got {target}")
        if not delta > 0:
            raise DomainError(f"delta must be > 0, got {delta}")
        if min_index < 0:
            raise DomainError(f"min_index must be >= 0, got {min_index}")

        lo = Fraction(target)
        hi = lo + Fraction(delta)
        if min_index < 1 and lo <= 1 <= hi:
            return 1, self._prefix[0]

        bracket = self._bracket(lo - 1, hi - 1)
        n, (a, b) = self._search(bracket, max(min_index - 1, 0))
        logger.debug("bracket [%s, %s] above %s -> index %s", target, target + delta, min_index, n + 1)
        return n + 1, Rational(a + b, b)

    def _search(self, bracket, floor):
        """Smallest Calkin-Wilf index n > floor whose value lies in the bracket."""
        start = 0
        if floor > 0:
            depth = floor.bit_length() - 1
            found = self._next_at_depth(bracket, floor, depth)
            if found is not None:
                return found
            start = depth + 1

        for depth in range(start, self.max_depth + 1):
            if _inside(1, 1, bracket.level(depth)):
                bits, pair = bracket.complete(1, 1, depth)
                return int("1" + bits, 2), pair
        raise BudgetExceededError(
            f"no rational found within depth {self.max_depth}; delta too small?"
        )

    def _next_at_depth(self, bracket, floor, depth):
        bits = bin(floor)[3:]
        nodes = [(1, 1)]
        for bit in bits:
            a, b = nodes[-1]
            nodes.append((a + b, b) if bit == "1" else (a, a + b))

        # deepest position where the path of `floor` turns left and turning
        # right instead still reaches the bracket
        for k in range(depth - 1, -1, -1):
            if bits[k] != "0":
                continue
            a, b = nodes[k]
            a += b
            remaining = depth - k - 1
            if _inside(a, b, bracket.level(remaining)):
                tail, pair = bracket.complete(a, b, remaining)
                return int("1" + bits[:k] + "1" + tail, 2), pair
        return None


DEFAULT_ENUM = RationalEnum()


def enum_rational(index, enum=None):
    """Return the index-th rational >= 1 of the enumeration."""
    return (enum or DEFAULT_ENUM).rational(index)


def find_index_above(target, delta, min_index=0, enum=None):
    """Module-level shortcut for RationalEnum.find_index_above."""
    return (enum or DEFAULT_ENUM).find_index_above(target, delta, min_index)
