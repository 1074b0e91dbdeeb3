"""Words, conjugacy classes and automorphisms of a free group of fixed rank.

Letters are nonzero integers: ``i`` is the i-th basis generator and ``-i`` its
inverse.  A word is a tuple of letters; every public function returns freely
reduced tuples.  Conjugacy classes are stored as the least rotation of a
cyclically reduced word under :func:`letter_key`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

Word = Tuple[int, ...]

DEFAULT_NAMES = "abcdefghijklmnopqrstuvwxyz"


class WordError(ValueError):
    """Letter outside the declared basis."""


class NotAnAutomorphism(ValueError):
    pass


class EffortExhausted(RuntimeError):
    pass


class MissingInverse(ValueError):
    pass


def letter_key(x: int) -> Tuple[int, int]:
    # a < a' < b < b' < ...
    return (abs(x), 0 if x > 0 else 1)


def reduce(letters: Iterable[int], rank: Optional[int] = None) -> Word:
    out = []
    for x in letters:
        if x == 0 or (rank is not None and abs(x) > rank):
            raise WordError(f"letter {x} outside basis of rank {rank}")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def multiply(*words: Sequence[int]) -> Word:
    return reduce(x for w in words for x in w)


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    return is_reduced(w) and (len(w) < 2 or w[0] != -w[-1])


def least_rotation(w: Sequence[int]) -> Tuple[Word, int]:
    """Return the lexicographically least rotation of ``w`` and its offset.

    Booth's algorithm, so long circuits stay linear.
    """
    n = len(w)
    if n == 0:
        return (), 0
    keys = [letter_key(x) for x in w]
    s = keys + keys
    f = [-1] * (2 * n)
    k = 0
    for j in range(1, 2 * n):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    k %= n
    return tuple(w[k:]) + tuple(w[:k]), k


def cyclic_reduce(w: Sequence[int]) -> Tuple[Word, Word]:
    """Split a reduced word as ``conjugator * core * conjugator^-1``.

    The core is cyclically reduced and canonically rotated.
    """
    w = reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    peel = w[:i]
    core = w[i:j + 1]
    canon, k = least_rotation(core)
    # core = x1 x2 with canon = x2 x1, so core = x1 canon x1^-1
    return canon, peel + core[:k]


def canonical_class(w: Sequence[int]) -> Word:
    return cyclic_reduce(w)[0]


def cyclic_contains(circuit: Sequence[int], segment: Sequence[int]) -> bool:
    """True iff ``segment`` is a subpath of the bi-infinite periodic word of ``circuit``."""
    n = len(circuit)
    if not segment:
        return True
    if n == 0:
        return False
    reps = len(segment) // n + 2
    return contains(tuple(circuit) * reps, segment)


def contains(w: Sequence[int], segment: Sequence[int]) -> bool:
    m = len(segment)
    if m == 0:
        return True
    seg = tuple(segment)
    first = seg[0]
    w = tuple(w)
    for i in range(len(w) - m + 1):
        if w[i] == first and w[i:i + m] == seg:
            return True
    return False


def format_word(w: Sequence[int], names: Sequence[str] = DEFAULT_NAMES, sep: str = " ") -> str:
    if not w:
        return "1"
    return sep.join(names[abs(x) - 1] + ("'" if x < 0 else "") for x in w)


@dataclass(frozen=True, eq=False)
class FreeAutomorphism:
    """Endomorphism of F_n given by the images of the basis generators.

    ``verified_inverse`` is only set by :meth:`invert` (or explicitly by a
    caller who has checked it); negative powers require it.
    """

    images: Tuple[Word, ...]
    verified_inverse: Optional["FreeAutomorphism"] = None
    names: str = DEFAULT_NAMES

    def __post_init__(self):
        rank = len(self.images)
        object.__setattr__(
            self, "images", tuple(reduce(w, rank) for w in self.images)
        )

    def __eq__(self, other):
        if not isinstance(other, FreeAutomorphism):
            return NotImplemented
        return self.images == other.images

    def __hash__(self):
        return hash(self.images)

    @property
    def rank(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, rank: int) -> "FreeAutomorphism":
        ident = tuple((i,) for i in range(1, rank + 1))
        aut = cls(ident)
        object.__setattr__(aut, "verified_inverse", aut)
        return aut

    def image(self, x: int) -> Word:
        return self.images[x - 1] if x > 0 else inverse(self.images[-x - 1])

    def apply(self, w: Sequence[int]) -> Word:
        rank = self.rank
        out = []
        for x in w:
            if x == 0 or abs(x) > rank:
                raise WordError(f"letter {x} outside basis of rank {rank}")
            for y in self.image(x):
                if out and out[-1] == -y:
                    out.pop()
                else:
                    out.append(y)
        return tuple(out)

    def __call__(self, w: Sequence[int]) -> Word:
        return self.apply(w)

    def compose(self, other: "FreeAutomorphism") -> "FreeAutomorphism":
        """``self ∘ other``: apply ``other`` first."""
        if other.rank != self.rank:
            raise WordError("rank mismatch")
        inv = None
        if self.verified_inverse is not None and other.verified_inverse is not None:
            inv = FreeAutomorphism(
                tuple(other.verified_inverse.apply(w) for w in self.verified_inverse.images),
                names=self.names,
            )
        res = FreeAutomorphism(tuple(self.apply(w) for w in other.images), names=self.names)
        if inv is not None:
            object.__setattr__(res, "verified_inverse", inv)
            object.__setattr__(inv, "verified_inverse", res)
        return res

    def is_identity(self) -> bool:
        return all(w == (i,) for i, w in enumerate(self.images, 1))

    def with_inverse(self, inv: "FreeAutomorphism") -> "FreeAutomorphism":
        if not self.compose(inv).is_identity() or not inv.compose(self).is_identity():
            raise NotAnAutomorphism("supplied inverse does not compose to the identity")
        a = FreeAutomorphism(self.images, names=self.names)
        b = FreeAutomorphism(inv.images, names=self.names)
        object.__setattr__(a, "verified_inverse", b)
        object.__setattr__(b, "verified_inverse", a)
        return a

    def inverse(self) -> "FreeAutomorphism":
        if self.verified_inverse is None:
            raise MissingInverse("automorphism has no verified inverse; call invert() first")
        return self.verified_inverse

    def power(self, k: int) -> "FreeAutomorphism":
        if k < 0:
            return self.inverse().power(-k)
        result = FreeAutomorphism.identity(self.rank)
        base = self
        while k:
            if k & 1:
                result = base.compose(result)
            base = base.compose(base)
            k >>= 1
        return result

    def iterate(self, w: Sequence[int], k: int) -> Word:
        f = self if k >= 0 else self.inverse()
        w = reduce(w)
        for _ in range(abs(k)):
            w = f.apply(w)
        return w

    def iterate_class(self, c: Sequence[int], k: int) -> Word:
        """Canonical class of ``φ^k(c)``; cyclic reduction after every step keeps it short."""
        f = self if k >= 0 else self.inverse()
        c = canonical_class(c)
        for _ in range(abs(k)):
            c = cyclic_reduce(f.apply(c))[0]
        return c

    def max_image_length(self) -> int:
        return max((len(w) for w in self.images), default=0)

    def format(self) -> str:
        return " ; ".join(
            f"{self.names[i]} -> {format_word(w, self.names)}" for i, w in enumerate(self.images)
        )

    def __repr__(self) -> str:
        return f"FreeAutomorphism({self.format()!r})"


def _nielsen_moves(rank: int):
    # Deterministic order: lowest generator index first.
    for i in range(rank):
        for j in range(rank):
            if i == j:
                continue
            for side in (0, 1):
                for eps in (1, -1):
                    yield i, j, side, eps


def _apply_move(images, track, i, j, side, eps):
    uj = images[j] if eps > 0 else inverse(images[j])
    tj = track[j] if eps > 0 else inverse(track[j])
    images = list(images)
    track = list(track)
    if side == 0:
        images[i] = multiply(images[i], uj)
        track[i] = multiply(track[i], tj)
    else:
        images[i] = multiply(uj, images[i])
        track[i] = multiply(tj, track[i])
    return tuple(images), tuple(track)


def invert(phi: FreeAutomorphism, effort_bound: int = 10_000) -> FreeAutomorphism:
    """Invert ``phi`` by Nielsen reduction of its image tuple.

    Each current image ``u_i`` equals ``phi(t_i)`` for a tracked word ``t_i``.
    Length-decreasing moves are taken greedily; on a plateau, length-preserving
    moves are explored breadth-first.  When every image is a single letter the
    tracked words give the inverse.
    """
    if effort_bound <= 0:
        raise ValueError("effort_bound must be positive")
    rank = phi.rank
    images = tuple(phi.images)
    track = tuple((i,) for i in range(1, rank + 1))
    effort = 0

    def total(ims):
        return sum(len(u) for u in ims)

    while True:
        if any(len(u) == 0 for u in images):
            raise NotAnAutomorphism("a generator image reduces to the identity")
        if all(len(u) == 1 for u in images):
            break
        cur = total(images)
        best = None
        for mv in _nielsen_moves(rank):
            effort += 1
            nim, ntr = _apply_move(images, track, *mv)
            t = total(nim)
            if t < cur and (best is None or t < best[0]):
                best = (t, nim, ntr)
        if effort > effort_bound:
            raise EffortExhausted(f"Nielsen reduction exceeded effort bound {effort_bound}")
        if best is not None:
            images, track = best[1], best[2]
            continue
        # plateau: search equal-length states for an exit
        found = None
        seen = {images}
        frontier = [(images, track)]
        while frontier and found is None:
            nxt = []
            for ims, trs in frontier:
                for mv in _nielsen_moves(rank):
                    effort += 1
                    if effort > effort_bound:
                        raise EffortExhausted(
                            f"Nielsen reduction exceeded effort bound {effort_bound}"
                        )
                    nim, ntr = _apply_move(ims, trs, *mv)
                    t = total(nim)
                    if t < cur:
                        found = (nim, ntr)
                        break
                    if t == cur and nim not in seen:
                        seen.add(nim)
                        nxt.append((nim, ntr))
                if found:
                    break
            frontier = nxt
        if found is None:
            raise NotAnAutomorphism(
                "Nielsen reduction stabilized above basis length: images do not form a basis"
            )
        images, track = found

    letters = [u[0] for u in images]
    if sorted(abs(x) for x in letters) != list(range(1, rank + 1)):
        raise NotAnAutomorphism("images reduce to a repeated letter; rank collapses")
    inv_images = [None] * rank
    for u, t in zip(images, track):
        x = u[0]
        inv_images[abs(x) - 1] = t if x > 0 else inverse(t)
    psi = FreeAutomorphism(tuple(inv_images), names=phi.names)
    return phi.with_inverse(psi).inverse()


def with_verified_inverse(phi: FreeAutomorphism, effort_bound: int = 10_000) -> FreeAutomorphism:
    """Return ``phi`` carrying a verified inverse (computing one if needed)."""
    if phi.verified_inverse is not None:
        return phi
    return invert(phi, effort_bound).inverse()


def is_inner(phi: FreeAutomorphism) -> bool:
    """Decide whether ``phi`` is conjugation by some element of F."""
    n = phi.rank
    if n == 0:
        return True
    core, conj = cyclic_reduce(phi.images[0])
    if core != (1,):
        return False
    # phi(x1) = u x1 u^-1 determines u up to right multiplication by powers of x1
    if n == 1:
        return True
    v = multiply(inverse(conj), phi.images[1], conj)
    # v must be x1^j x2 x1^-j
    j = 0
    while j < len(v) and abs(v[j]) == 1:
        j += 1
    head = v[:j]
    if head and len(set(head)) != 1:
        return False
    power = len(head) * (1 if not head or head[0] > 0 else -1)
    u = multiply(conj, (1,) * power if power >= 0 else (-1,) * (-power))
    u_inv = inverse(u)
    return all(
        phi.images[i - 1] == multiply(u, (i,), u_inv) for i in range(1, n + 1)
    )
