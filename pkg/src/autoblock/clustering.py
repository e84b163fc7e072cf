"""Posterior-correlation clustering: distances, dendrogram, cuts, plans.

Distances are 1 - |rho| so that strongly correlated pairs sit near 0 and the
sign of the correlation is irrelevant.  The dendrogram uses complete linkage
(merge height = max pairwise member distance), which guarantees that cutting
at height h leaves every intra-group absolute correlation at least 1 - h.
Cutting at 0 always returns singletons (all-scalar) and cutting at 1 a
single group (all-blocked).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import TooFewSamplesError
from .samplers import SamplerPlan

Partition = tuple[tuple[int, ...], ...]


def correlation_matrix(chain, discard_fraction: float = 0.5) -> np.ndarray:
    """Pearson correlations of the retained rows of a chain.

    The first ``discard_fraction`` of rows is dropped (adaptation warm-up,
    not burn-in in the convergence sense).  Zero-variance columns correlate
    0 with everything and 1 with themselves so stuck parameters become
    singletons downstream.
    """
    samples = chain.samples if hasattr(chain, "samples") else np.asarray(chain)
    if not 0.0 <= discard_fraction < 1.0:
        raise ValueError("discard_fraction must be in [0, 1)")
    start = int(samples.shape[0] * discard_fraction)
    kept = samples[start:]
    if kept.shape[0] < 10:
        raise TooFewSamplesError(
            f"only {kept.shape[0]} rows retained after discarding "
            f"{discard_fraction:.0%}; need at least 10")
    d = kept.shape[1]
    sd = kept.std(axis=0)
    live = sd > 0.0
    corr = np.zeros((d, d))
    np.fill_diagonal(corr, 1.0)
    idx = np.flatnonzero(live)
    if idx.size >= 2:
        sub = np.corrcoef(kept[:, idx], rowvar=False)
        sub = np.clip(sub, -1.0, 1.0)
        corr[np.ix_(idx, idx)] = sub
        corr[np.diag_indices(d)] = 1.0
    return corr


def distance_matrix(corr: np.ndarray) -> np.ndarray:
    """Map correlations to clustering distances d = 1 - |rho|."""
    dist = 1.0 - np.abs(np.asarray(corr, dtype=float))
    dist = np.clip(dist, 0.0, 1.0)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree over leaves 0..n-1; new clusters get ids n, n+1, ...

    ``merges[m]`` is (cluster_a, cluster_b, height); heights are
    nondecreasing and each equals the maximum pairwise distance between the
    merged clusters' members.
    """

    n_leaves: int
    merges: tuple[tuple[int, int, float], ...]

    def members(self) -> list[tuple[int, ...]]:
        """Member leaves of every cluster id (leaves, then merge results)."""
        out = [(i,) for i in range(self.n_leaves)]
        for a, b, _ in self.merges:
            out.append(tuple(sorted(out[a] + out[b])))
        return out

    def leaf_order(self) -> tuple[int, ...]:
        """Left-to-right leaf ordering for plotting."""
        if not self.merges:
            return tuple(range(self.n_leaves))

        def walk(cid):
            if cid < self.n_leaves:
                return [cid]
            a, b, _ = self.merges[cid - self.n_leaves]
            return walk(a) + walk(b)
        return tuple(walk(self.n_leaves + len(self.merges) - 1))

    def to_dict(self) -> dict:
        return {"n_leaves": self.n_leaves,
                "merges": [[a, b, h] for a, b, h in self.merges]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def complete_linkage(dist: np.ndarray) -> Dendrogram:
    """Agglomerate with complete linkage and deterministic tie-breaking.

    Ties on the minimum linkage distance go to the pair whose (least member
    of first cluster, least member of second cluster) is lexicographically
    smallest.
    """
    dist = np.asarray(dist, dtype=float)
    d = dist.shape[0]
    if dist.shape != (d, d):
        raise ValueError("distance matrix must be square")
    if d == 0:
        raise ValueError("distance matrix is empty")
    if not np.allclose(dist, dist.T, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if d == 1:
        return Dendrogram(1, ())

    work = dist.astype(float).copy()
    np.fill_diagonal(work, np.inf)
    active = list(range(d))            # positions into `work`
    cluster_id = list(range(d))        # dendrogram id at each position
    min_member = list(range(d))        # least leaf in each cluster
    merges = []
    next_id = d
    for _ in range(d - 1):
        sub = work[np.ix_(active, active)]
        m = sub.min()
        ties = np.argwhere(sub == m)
        best = None
        for r, c in ties:
            if r >= c:
                continue
            pa, pb = active[r], active[c]
            key = tuple(sorted((min_member[pa], min_member[pb])))
            if best is None or key < best[0]:
                best = (key, pa, pb)
        _, pa, pb = best
        if min_member[pb] < min_member[pa]:
            pa, pb = pb, pa
        merges.append((cluster_id[pa], cluster_id[pb], float(m)))
        # complete linkage: distance to the merged cluster is the max
        np.maximum(work[pa, :], work[pb, :], out=work[pa, :])
        work[:, pa] = work[pa, :]
        work[pa, pa] = np.inf
        cluster_id[pa] = next_id
        min_member[pa] = min(min_member[pa], min_member[pb])
        next_id += 1
        active.remove(pb)
    return Dendrogram(d, tuple(merges))


def cut(tree: Dendrogram, height: float) -> Partition:
    """Maximal clusters whose internal merges all happened at <= height.

    Cutting at exactly 0 returns all singletons even if some merges sit at
    height 0, preserving the all-scalar boundary case.
    """
    if not 0.0 <= height <= 1.0:
        raise ValueError("cut height must be in [0, 1]")
    n = tree.n_leaves
    if height == 0.0 or not tree.merges:
        return tuple((i,) for i in range(n))
    parent = list(range(n + len(tree.merges)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for m, (a, b, h) in enumerate(tree.merges):
        if h <= height:
            cid = n + m
            parent[find(a)] = cid
            parent[find(b)] = cid
    groups = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    return tuple(sorted((tuple(g) for g in groups.values()),
                        key=lambda g: g[0]))


def plan_from_partition(partition) -> SamplerPlan:
    """Singleton groups become scalar samplers, larger groups block samplers."""
    groups = tuple(tuple(int(i) for i in g) for g in partition)
    d = sum(len(g) for g in groups)
    return SamplerPlan(d, groups)
