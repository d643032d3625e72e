"""Surface group presentations and free-group word machinery.

Words are strings over lowercase generator letters; the inverse of a
generator is its uppercase form (and vice versa), following the common
convention for numerical group computations.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from .errors import BudgetExceeded

DEFAULT_WORD_BUDGET = 2_000_000


def invert_letter(ch: str) -> str:
    return ch.swapcase()


def invert_word(word: str) -> str:
    return "".join(ch.swapcase() for ch in reversed(word))


def reduce_word(word: str) -> str:
    """Freely reduce by cancelling adjacent inverse pairs."""
    out = []
    for ch in word:
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def is_reduced(word: str) -> bool:
    return all(word[i] != word[i + 1].swapcase() for i in range(len(word) - 1))


def cyclic_reduce(word: str) -> str:
    """Shortest word conjugate to ``word`` in the free group."""
    w = reduce_word(word)
    while len(w) >= 2 and w[0] == w[-1].swapcase():
        w = w[1:-1]
    return w


def is_cyclically_reduced(word: str) -> bool:
    if not is_reduced(word):
        return False
    return len(word) < 2 or word[0] != word[-1].swapcase()


def canonical_rotation(word: str) -> str:
    """Lexicographically smallest cyclic rotation; class invariant."""
    return min(word[i:] + word[:i] for i in range(len(word)))


def conjugate_word(u: str, w: str) -> str:
    """Reduced form of u w u^-1."""
    return reduce_word(u + w + invert_word(u))


def primitive_root(word: str) -> str:
    """Shortest u with word = u^j (as a string of letters)."""
    m = len(word)
    for d in range(1, m + 1):
        if m % d == 0 and word[:d] * (m // d) == word:
            return word[:d]
    return word


@dataclass(frozen=True)
class Presentation:
    """Standard presentation of the fundamental group of a closed genus-g surface.

    Generators are paired as (a, b), (c, d), ... and the single relator is
    the product of the pair commutators, of length 4g.
    """

    genus: int

    def __post_init__(self):
        if self.genus < 2:
            raise ValueError("genus must be at least 2")
        if 2 * self.genus > 26:
            raise ValueError("genus too large for letter alphabet")

    @property
    def generators(self):
        return tuple(string.ascii_lowercase[: 2 * self.genus])

    @property
    def alphabet(self):
        gens = self.generators
        return gens + tuple(ch.upper() for ch in gens)

    @property
    def relator(self):
        parts = []
        gens = self.generators
        for i in range(self.genus):
            x, y = gens[2 * i], gens[2 * i + 1]
            parts.append(x + y + x.upper() + y.upper())
        return "".join(parts)


def count_reduced(p: Presentation, L: int) -> int:
    """Closed-form count of nonempty freely reduced words of length <= L."""
    m = len(p.alphabet)
    return sum(m * (m - 1) ** (l - 1) for l in range(1, L + 1))


def enumerate_reduced(p: Presentation, L: int, budget: int = DEFAULT_WORD_BUDGET):
    """Yield all nonempty freely reduced words of length <= L, in lexicographic
    depth-first order, each exactly once."""
    if L < 1:
        raise ValueError("L must be at least 1")
    if count_reduced(p, L) > budget:
        raise BudgetExceeded(f"budget-exceeded: {count_reduced(p, L)} > {budget}")
    alphabet = p.alphabet

    def rec(prefix):
        for ch in alphabet:
            if prefix and ch == prefix[-1].swapcase():
                continue
            w = prefix + ch
            yield w
            if len(w) < L:
                yield from rec(w)

    yield from rec("")


def conjugacy_representatives(p: Presentation, L: int, budget: int = DEFAULT_WORD_BUDGET):
    """Yield one representative per cyclic-rotation class of cyclically
    reduced words of length <= L.

    Free-group conjugacy over-approximates surface-group conjugacy; the
    duplicates this tolerates only repeat values in downstream extrema.
    """
    for w in enumerate_reduced(p, L, budget=budget):
        if not is_cyclically_reduced(w):
            continue
        if w == canonical_rotation(w):
            yield w
