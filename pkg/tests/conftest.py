import itertools
from fractions import Fraction

import numpy as np
import pytest

from fptwalk import increments as inc
from fptwalk.boundaries import make_boundary


def random_lattice_law(rng, max_jump=3):
    """Mean-zero law on 2 or 3 integer atoms with rational probabilities."""
    a = int(rng.integers(1, max_jump + 1))
    b = int(rng.integers(1, max_jump + 1))
    if rng.random() < 0.5 or a + b < 2:
        return {-a: Fraction(b, a + b), b: Fraction(a, a + b)}
    c = int(rng.integers(-a + 1, b))
    while True:
        pc = Fraction(int(rng.integers(1, 5)), 10)
        pb = (a * (1 - pc) - pc * c) / (a + b)
        pa = 1 - pc - pb
        if pa > 0 and pb > 0:
            return {-a: pa, c: pc, b: pb}


def random_instance(rng, n_max=8):
    """Random 2-3 atom schedule with a random integer boundary that can be survived."""
    while True:
        n = int(rng.integers(1, n_max + 1))
        laws = [random_lattice_law(rng) for _ in range(n)]
        g = [int(x) for x in rng.integers(-3, 2, size=n)]
        sched = inc.DiscreteSchedule([[(v, float(p)) for v, p in law.items()] for law in laws])
        bnd = make_boundary("custom", {"values": g})
        if inc.feasibility_check(sched, bnd, n):
            return laws, g, sched, bnd


def enumerate_paths(laws, g):
    """Brute force over all paths: per-n survival, E Z*_n, E[-S_T; T<=n] and free laws."""
    n = len(laws)
    rows = []
    for m in range(1, n + 1):
        surv = ez = neg = Fraction(0)
        free = {}
        for path in itertools.product(*(list(law.items()) for law in laws[:m])):
            p = Fraction(1)
            s = 0
            dead = None
            for k, (x, q) in enumerate(path):
                p *= q
                s += x
                if dead is None and s <= g[k]:
                    dead = s
            free[s] = free.get(s, 0) + p
            if dead is None:
                surv += p
                ez += (s - g[m - 1]) * p
            else:
                neg -= dead * p
        rows.append({"survival": surv, "ez_star": ez, "absorbed_neg_s": neg, "free": free})
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
