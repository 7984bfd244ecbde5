"""Bucketed smoothed sums over norms, shared by both averaging routes.

Every sum handled here has the shape

    sum_{m, (m, N) = 1} omega(m)/m  sum_d  w(d) V(m^2 d / X)  [m^2 d <= n_max]

split into buckets by a class label of d and the residue of m^2 d modulo q.
Work is cut into fixed (m, block) tasks whose partial bucket arrays are
combined in task order with compensated summation, so the result does not
depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

BLOCK = 1 << 19


@dataclass(frozen=True)
class Job:
    """One output table: kernel V_{kernel} at level X, truncated at n_max."""

    level: float
    n_max: int
    kernel: int  # 1 or 2
    scale: float = 1.0  # argument multiplier, e.g. p^4 for shifted kernels


def kernel_values(kernel: int, y: np.ndarray) -> np.ndarray:
    if kernel == 1:
        return np.exp(-2 * np.pi * y)
    if kernel == 2:
        return special.exp1(2 * np.pi * y)
    raise ValueError(f"kernel index {kernel} not supported on the hot path")


class KahanAccumulator:
    def __init__(self, shape):
        self.sum = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, x: np.ndarray) -> None:
        y = x - self.comp
        t = self.sum + y
        self.comp = (t - self.sum) - y
        self.sum = t


@dataclass
class Lattice:
    """Sorted norms d with weights w(d) and class labels."""

    d: np.ndarray
    w: np.ndarray
    cls: np.ndarray
    ncls: int

    @classmethod
    def merge(cls_, parts: list[tuple[np.ndarray, np.ndarray, int]], ncls: int) -> "Lattice":
        if not parts:
            z = np.zeros(0, dtype=np.int64)
            return cls_(z, np.zeros(0), z, ncls)
        d = np.concatenate([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts])
        lab = np.concatenate([np.full(len(p[0]), p[2], dtype=np.int64) for p in parts])
        order = np.argsort(d, kind="stable")
        return cls_(d[order], w[order], lab[order], ncls)


def m_weights(omega_table: np.ndarray, N: int, m_max: int, exclude_p: int = 0) -> list[tuple[int, float]]:
    """(m, omega(m)/m) for admissible m <= m_max."""
    absD = len(omega_table)
    out = []
    for m in range(1, m_max + 1):
        if math.gcd(m, N) != 1:
            continue
        if exclude_p and m % exclude_p == 0:
            continue
        om = omega_table[m % absD]
        if om:
            out.append((m, om / m))
    return out


def bucket_sums(lat: Lattice, q: int, jobs: list[Job], mw: list[tuple[int, float]], threads: int = 1) -> list[np.ndarray]:
    """For each job, an (ncls, q) array of bucketed smoothed sums."""
    shape = (lat.ncls, q)
    if not jobs:
        return []
    top = max(j.n_max for j in jobs)
    dq = lat.d % q
    base = lat.cls * q
    tasks = []
    for m, coef in mw:
        mm = m * m
        if mm > top:
            break
        end = int(np.searchsorted(lat.d, top // mm, side="right"))
        for b0 in range(0, end, BLOCK):
            tasks.append((mm, coef, b0, min(b0 + BLOCK, end)))

    def run(task):
        mm, coef, b0, b1 = task
        d = lat.d[b0:b1]
        out = []
        for job in jobs:
            cut = job.n_max // mm
            i = int(np.searchsorted(d, cut, side="right"))
            if i == 0:
                out.append(None)
                continue
            y = (mm * job.scale / job.level) * d[:i]
            vals = coef * lat.w[b0 : b0 + i] * kernel_values(job.kernel, y)
            key = base[b0 : b0 + i] + (dq[b0 : b0 + i] * (mm % q)) % q
            out.append(np.bincount(key, vals, minlength=lat.ncls * q).reshape(shape))
        return out

    accs = [KahanAccumulator(shape) for _ in jobs]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = ex.map(run, tasks)
            for res in results:
                for acc, r in zip(accs, res):
                    if r is not None:
                        acc.add(r)
    else:
        for task in tasks:
            for acc, r in zip(accs, run(task)):
                if r is not None:
                    acc.add(r)
    return [a.sum for a in accs]
