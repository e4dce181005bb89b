"""Permutation combinatorics and the wiring decomposition of fusion chains.

Conventions: slots and images are 0-based, so a permutation on n elements maps
``t -> images[t]`` for ``t in range(n)``. The wiring graph of a fusion chain
has vertices ``0..n`` (auxiliary registers, 0 = input boundary, n = output
boundary) and, for each step ``t``, one directed edge ``t -> images[t] + 1``.
Each such graph splits uniquely into one open path from vertex 0 to vertex n
plus disjoint directed cycles; evaluators consume that split.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError

#: Largest n for which full permutation enumeration is allowed by default
#: (9! = 362880 terms). Raise per call via the ``cap`` argument.
FACTORIAL_CAP = 9


def _cycles_of(images: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    n = len(images)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cyc = []
        j = start
        while not seen[j]:
            seen[j] = True
            cyc.append(j)
            j = images[j]
        cycles.append(tuple(cyc))
    return tuple(cycles)


@dataclass(frozen=True)
class Permutation:
    """A permutation with its sign and cycle structure precomputed."""

    images: tuple[int, ...]
    sign: int
    cycles: tuple[tuple[int, ...], ...]

    @classmethod
    def from_images(cls, images: Sequence[int]) -> "Permutation":
        images = tuple(int(x) for x in images)
        n = len(images)
        if sorted(images) != list(range(n)):
            raise ValueError(f"images {images} are not a bijection on 0..{n - 1}")
        cycles = _cycles_of(images)
        sign = -1 if (n - len(cycles)) % 2 else 1
        return cls(images=images, sign=sign, cycles=cycles)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, t: int) -> int:
        return self.images[t]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for t, v in enumerate(self.images):
            inv[v] = t
        return Permutation.from_images(inv)


def permutations(n: int, cap: int = FACTORIAL_CAP) -> Iterator[Permutation]:
    """All n! permutations in lexicographic order of their image tuples."""
    if n < 1:
        raise ValueError(f"permutations requires n >= 1, got {n}")
    if n > cap:
        raise CapacityError(
            f"permutation enumeration for n={n} exceeds the factorial cap {cap}"
        )
    for images in itertools.permutations(range(n)):
        yield Permutation.from_images(images)


@dataclass(frozen=True)
class PathCycle:
    """Path/cycle split of a permutation's fusion wiring.

    ``path_steps`` lists the step indices along the open path from vertex 0
    to vertex n, in traversal order; ``path_vertices`` is the visited vertex
    sequence (one longer). ``cycle_steps`` lists each directed cycle as its
    step indices in traversal order. Every step appears exactly once across
    ``path_steps`` and ``cycle_steps``.
    """

    perm: Permutation
    path_steps: tuple[int, ...]
    path_vertices: tuple[int, ...]
    cycle_steps: tuple[tuple[int, ...], ...]

    def to_permutation(self) -> Permutation:
        """Rebuild the permutation from the edges (bijectivity round trip).

        The out-edge of vertex v is step v, so within a cycle the traversal
        successor of step s is also the target vertex of step s.
        """
        n = len(self.path_steps) + sum(len(c) for c in self.cycle_steps)
        images = [-1] * n
        for i, step in enumerate(self.path_steps):
            images[step] = self.path_vertices[i + 1] - 1
        for cyc in self.cycle_steps:
            for i, step in enumerate(cyc):
                images[step] = cyc[(i + 1) % len(cyc)] - 1
        return Permutation.from_images(images)


def path_cycle_decompose(perm: Permutation) -> PathCycle:
    """Split the fusion wiring of ``perm`` into its open path and cycles.

    Vertex t (t < n) has the single outgoing edge of step t, pointing at
    vertex ``perm(t) + 1``; vertex n has none. Following edges from vertex 0
    until vertex n yields the open path; every unused step then lies on a
    directed cycle, traversed the same way.
    """
    n = perm.n
    used = [False] * n
    path_steps = []
    vertices = [0]
    v = 0
    while v != n:
        path_steps.append(v)
        used[v] = True
        v = perm.images[v] + 1
        vertices.append(v)
    cycles = []
    for start in range(n):
        if used[start]:
            continue
        cyc = []
        j = start
        while not used[j]:
            used[j] = True
            cyc.append(j)
            j = perm.images[j] + 1
        cycles.append(tuple(cyc))
    return PathCycle(
        perm=perm,
        path_steps=tuple(path_steps),
        path_vertices=tuple(vertices),
        cycle_steps=tuple(cycles),
    )


@lru_cache(maxsize=16)
def fusion_wiring(n: int, cap: int = FACTORIAL_CAP) -> tuple[PathCycle, ...]:
    """Cached path/cycle splits for all permutations of n steps (hot path)."""
    return tuple(path_cycle_decompose(p) for p in permutations(n, cap=cap))


@lru_cache(maxsize=16)
def permutation_table(n: int, cap: int = FACTORIAL_CAP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(images, signs, cycle counts) arrays over all n! permutations."""
    images = []
    signs = []
    ncyc = []
    for p in permutations(n, cap=cap):
        images.append(p.images)
        signs.append(p.sign)
        ncyc.append(len(p.cycles))
    return (
        np.array(images, dtype=np.intp),
        np.array(signs, dtype=np.int64),
        np.array(ncyc, dtype=np.int64),
    )
