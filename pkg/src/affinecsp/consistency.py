"""k-consistency on domains of size at most k."""

from __future__ import annotations

import random
from collections import defaultdict, deque
from typing import Mapping

from .relaxations import KappaMap
from .structures import RelStructure, partial_hom_table, subsets_upto


def k_consistency(
    a: RelStructure,
    b: RelStructure,
    k: int,
    seed: Mapping[tuple[int, ...], list[tuple[int, ...]]] | None = None,
    rng: random.Random | None = None,
) -> KappaMap:
    """Greatest family inside ``seed`` closed under restriction and one-point extension.

    ``seed=None`` starts from all partial homs. With ``rng`` the violating
    pairs are removed in random order (the result does not depend on it).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if seed is None:
        seed = partial_hom_table(a, b, k)
    n = len(b)
    sets = subsets_upto(n, k)
    h = {xs: set(seed.get(xs, ())) for xs in sets}
    # ext[(X, y)][f]: members of H(X + y) restricting to f on X
    ext: dict[tuple[tuple[int, ...], int], dict[tuple[int, ...], set]] = {}
    for ys in sets:
        for i, y in enumerate(ys):
            idx: dict[tuple[int, ...], set] = defaultdict(set)
            for g in h[ys]:
                idx[g[:i] + g[i + 1 :]].add(g)
            ext[(ys[:i] + ys[i + 1 :], y)] = idx

    def violates(xs: tuple[int, ...], f: tuple[int, ...]) -> bool:
        for i in range(len(xs)):
            if f[:i] + f[i + 1 :] not in h[xs[:i] + xs[i + 1 :]]:
                return True
        if len(xs) < k:
            for y in range(n):
                if y not in xs and not ext[(xs, y)].get(f):
                    return True
        return False

    work = [(xs, f) for xs in sets for f in sorted(h[xs]) if violates(xs, f)]
    queue: deque | list
    if rng is None:
        queue = deque(work)
        pop = queue.popleft
    else:
        queue = work

        def pop():
            j = rng.randrange(len(queue))
            queue[j], queue[-1] = queue[-1], queue[j]
            return queue.pop()

    while queue:
        xs, f = pop()
        if f not in h[xs]:
            continue
        h[xs].discard(f)
        for i, y in enumerate(xs):
            sub, fs = xs[:i] + xs[i + 1 :], f[:i] + f[i + 1 :]
            bucket = ext[(sub, y)].get(fs)
            if bucket is not None:
                bucket.discard(f)
                if not bucket and fs in h[sub]:
                    queue.append((sub, fs))
        if len(xs) < k:
            for y in range(n):
                if y not in xs:
                    for g in ext[(xs, y)].get(f, ()):
                        ys = tuple(sorted(xs + (y,)))
                        if g in h[ys]:
                            queue.append((ys, g))
    return KappaMap({xs: sorted(h[xs]) for xs in sets})


def kappa_all_nonempty(kappa: Mapping[tuple[int, ...], list]) -> bool:
    return all(len(v) > 0 for v in kappa.values())
