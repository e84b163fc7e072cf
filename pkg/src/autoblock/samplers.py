"""Adaptive random-walk Metropolis samplers and the chain-running driver.

A :class:`SamplerPlan` partitions the graph's scalar parameter slots into
singleton (scalar sampler) and multi-member (block sampler) groups.  Each
sampler evaluates only the densities its slots can change: the owning
stochastic nodes plus their dependents, every node counted once.  Proposal
scales adapt every ``ADAPT_INTERVAL`` iterations toward the usual optimal
acceptance rates (0.44 scalar, 0.234 for blocks of dimension >= 5); block
samplers additionally adapt their proposal covariance from the running
empirical covariance of the visited states.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError

NEG_INF = float("-inf")

ADAPT_INTERVAL = 200
SCALE_MIN = 1e-8
SCALE_MAX = 10.0
SCALAR_TARGET_RATE = 0.44
SIGMA_BLEND_EPS = 1e-8


def block_target_rate(k: int) -> float:
    """Target acceptance rate for a block of dimension k."""
    if k <= 2:
        return 0.44
    if k == 3:
        return 0.35
    if k == 4:
        return 0.25
    return 0.234


@dataclass(frozen=True)
class SamplerPlan:
    """A partition of slots {0..d-1} into scalar and block sampler groups.

    Groups are canonicalized (members ascending, groups ordered by least
    member), so any construction order of the same partition compares and
    executes identically.
    """

    d: int
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        canon = tuple(sorted((tuple(sorted(int(i) for i in g))
                              for g in self.groups),
                             key=lambda g: g[0] if g else -1))
        object.__setattr__(self, "groups", canon)
        seen = set()
        for g in canon:
            if not g:
                raise ValueError("sampler plan contains an empty group")
            for i in g:
                if not 0 <= i < self.d:
                    raise ValueError(f"slot index {i} outside 0..{self.d - 1}")
                if i in seen:
                    raise ValueError(f"slot index {i} appears in two groups")
                seen.add(i)
        if len(seen) != self.d:
            missing = sorted(set(range(self.d)) - seen)
            raise ValueError(f"plan does not cover slots {missing}")

    @classmethod
    def all_scalar(cls, d: int) -> "SamplerPlan":
        return cls(d, tuple((i,) for i in range(d)))

    @classmethod
    def all_blocked(cls, d: int) -> "SamplerPlan":
        return cls(d, (tuple(range(d)),))

    @property
    def n_blocks(self) -> int:
        return sum(1 for g in self.groups if len(g) > 1)

    def block_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(g for g in self.groups if len(g) > 1)

    def named_groups(self, slot_names) -> list[list[str]]:
        return [[slot_names[i] for i in g] for g in self.groups]

    def describe(self) -> str:
        sizes = sorted((len(g) for g in self.groups if len(g) > 1), reverse=True)
        n_scalar = sum(1 for g in self.groups if len(g) == 1)
        parts = []
        if sizes:
            parts.append("blocks " + "/".join(str(s) for s in sizes))
        if n_scalar:
            parts.append(f"{n_scalar} scalar")
        return ", ".join(parts) if parts else "empty"


def _state_io(graph, slots):
    """(read, write) closures for a block's slot vector.

    When a block is exactly a contiguous range of one vector node (the
    common case for blocks recovered from a single multivariate prior), the
    vector moves through one array slice instead of d scalar writes.
    """
    k = len(slots)
    owners = [graph.slot_owner(i) for i in slots]
    elems = [graph._slot_elem[i] for i in slots]
    node = owners[0]
    contiguous = (all(o is node for o in owners)
                  and elems[0] >= 0
                  and elems == list(range(elems[0], elems[0] + k)))
    if contiguous:
        lo, hi = elems[0], elems[0] + k
        mark = graph._mark_stale
        has_dets = bool(node._det_down)

        def read():
            return node.value[lo:hi].copy()

        def write(vec):
            node.value[lo:hi] = vec
            if has_dets:
                mark(node)
        return read, write

    def read():
        out = np.empty(k)
        for j, (n, e) in enumerate(zip(owners, elems)):
            out[j] = n.value if e < 0 else n.value[e]
        return out

    def write(vec):
        set_slot = graph.set_slot
        for i, v in zip(slots, vec):
            set_slot(i, v)
    return read, write


def _eval_closures(graph, slots):
    """Density closures for the owning nodes plus their dependents, deduped."""
    owners = []
    seen = set()
    for i in slots:
        node = graph.slot_owner(i)
        if node.index not in seen:
            seen.add(node.index)
            owners.append(node)
    extra = {}
    for node in owners:
        for dep in graph._dependent_nodes(node):
            if dep.index not in seen:
                extra[dep.index] = dep
    nodes = owners + sorted(extra.values(), key=lambda n: n.index)
    return [n._logpdf for n in nodes], tuple(n.name for n in nodes)


class ScalarSampler:
    """Adaptive univariate random-walk Metropolis sampler for one slot."""

    def __init__(self, graph, slot: int, adapt_interval: int = ADAPT_INTERVAL):
        self._graph = graph
        self.slot = slot
        self.scale = 1.0
        self.target_rate = SCALAR_TARGET_RATE
        self.adapt_interval = adapt_interval
        self.times_adapted = 0
        self.last_window_rate = math.nan
        self._window_accepts = 0
        self._steps = 0
        self._fns, self.evaluated_nodes = _eval_closures(graph, (slot,))

    def step(self, rng) -> bool:
        g = self._graph
        z = rng.standard_normal()
        u = rng.random()
        g.refresh()
        cur = 0.0
        for f in self._fns:
            cur += f()
        i = self.slot
        old = g.get_slot(i)
        g.set_slot(i, old + self.scale * z)
        g.refresh()
        new = 0.0
        for f in self._fns:
            new += f()
        if new == NEG_INF or new != new:
            accepted = False
        else:
            delta = new - cur
            accepted = delta >= 0.0 or u < math.exp(delta)
        if not accepted:
            g.set_slot(i, old)
        self._steps += 1
        self._window_accepts += accepted
        if self._steps % self.adapt_interval == 0:
            self.adapt(self._window_accepts / self.adapt_interval)
            self._window_accepts = 0
        return accepted

    def adapt(self, window_rate: float):
        """Nudge log(scale) toward the target rate with diminishing gain."""
        self.last_window_rate = window_rate
        gain = 1.0 / math.sqrt(self.times_adapted + 1.0)
        scale = self.scale * math.exp(gain * (window_rate - self.target_rate))
        self.scale = min(max(scale, SCALE_MIN), SCALE_MAX)
        self.times_adapted += 1


class BlockSampler:
    """Adaptive multivariate random-walk Metropolis sampler for >= 2 slots."""

    def __init__(self, graph, slots, adapt_interval: int = ADAPT_INTERVAL):
        slots = tuple(int(i) for i in slots)
        if len(slots) < 2:
            raise ValueError("block sampler needs at least two slots")
        self._graph = graph
        self.slots = slots
        k = len(slots)
        self.k = k
        self.scale = 2.38 ** 2 / k
        self.sigma = np.eye(k)
        self._chol = np.eye(k)
        self.target_rate = block_target_rate(k)
        self.adapt_interval = adapt_interval
        self.times_adapted = 0
        self.last_window_rate = math.nan
        self._window_accepts = 0
        self._steps = 0
        self._mean = np.zeros(k)
        self._m2 = np.zeros((k, k))
        self._count = 0
        self._fns, self.evaluated_nodes = _eval_closures(graph, slots)
        self._read_state, self._write_state = _state_io(graph, slots)

    def proposal_cholesky(self) -> np.ndarray:
        """Lower factor of the scale-adjusted proposal covariance."""
        return math.sqrt(self.scale) * self._chol

    def step(self, rng) -> bool:
        g = self._graph
        z = rng.standard_normal(self.k)
        u = rng.random()
        g.refresh()
        cur = 0.0
        for f in self._fns:
            cur += f()
        old = self._read_state()
        move = self._chol @ z
        move *= math.sqrt(self.scale)
        prop = old + move
        self._write_state(prop)
        g.refresh()
        new = 0.0
        for f in self._fns:
            new += f()
        if new == NEG_INF or new != new:
            accepted = False
        else:
            delta = new - cur
            accepted = delta >= 0.0 or u < math.exp(delta)
        if not accepted:
            self._write_state(old)
        self._observe(prop if accepted else old)
        self._steps += 1
        self._window_accepts += accepted
        if self._steps % self.adapt_interval == 0:
            self.adapt(self._window_accepts / self.adapt_interval)
            self._window_accepts = 0
        return accepted

    def _observe(self, state):
        """Fold one chain state into the running covariance accumulators."""
        n = self._count + 1
        delta = state - self._mean
        self._mean += delta / n
        self._m2 += np.outer(delta, state - self._mean)
        self._count = n

    def adapt(self, window_rate: float):
        """Scale update plus refresh of the adapted covariance factor."""
        self.last_window_rate = window_rate
        gain = 1.0 / math.sqrt(self.times_adapted + 1.0)
        scale = self.scale * math.exp(gain * (window_rate - self.target_rate))
        self.scale = min(max(scale, SCALE_MIN), SCALE_MAX)
        if self._count >= 2:
            emp = self._m2 / (self._count - 1)
            sigma = emp + SIGMA_BLEND_EPS * np.eye(self.k)
            self.sigma, self._chol = _safe_cholesky(sigma)
        self.times_adapted += 1


def _safe_cholesky(sigma):
    """Factor sigma, regularizing once on failure, never aborting the run."""
    try:
        return sigma, np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    k = sigma.shape[0]
    bump = 1e-6 * float(np.trace(sigma)) / k + 1e-12
    sigma = sigma + bump * np.eye(k)
    try:
        return sigma, np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        eye = np.eye(k)
        return eye, eye.copy()


@dataclass
class ChainMatrix:
    """Posterior samples in theta order plus the sampler wall-clock cost.

    ``sampling_seconds`` covers sampler execution only; recording,
    diagnostics and IO are excluded.
    """

    samples: np.ndarray
    sampling_seconds: float
    slot_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def seconds_per_iteration(self) -> float:
        return self.sampling_seconds / self.n

    def to_csv(self, path):
        header = ",".join(self.slot_names)
        np.savetxt(path, self.samples, delimiter=",", header=header,
                   comments="", fmt="%.17g")


def build_samplers(graph, plan: SamplerPlan):
    """Instantiate fresh sampler states for a plan, in plan order."""
    samplers = []
    for group in plan.groups:
        if len(group) == 1:
            samplers.append(ScalarSampler(graph, group[0]))
        else:
            samplers.append(BlockSampler(graph, group))
    return samplers


def run_mcmc(graph, plan: SamplerPlan, n_iterations: int, seed=0) -> ChainMatrix:
    """Run the plan's samplers for ``n_iterations`` full sweeps.

    The graph is reset to its initial parameter values first, and a fresh
    seeded generator drives all samplers in plan order, so identical
    (graph, plan, n_iterations, seed) inputs reproduce the chain bit for bit.
    """
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    if plan.d != graph.d:
        raise LengthMismatchError(
            f"plan covers {plan.d} slots but the graph has {graph.d}")
    graph.reset_to_initial()
    graph.refresh()
    samplers = build_samplers(graph, plan)
    rng = np.random.default_rng(seed)
    samples = np.empty((n_iterations, graph.d))
    total = 0.0
    perf = time.perf_counter
    for it in range(n_iterations):
        t0 = perf()
        for s in samplers:
            s.step(rng)
        total += perf() - t0
        graph.get_theta_into(samples[it])
    return ChainMatrix(samples=samples, sampling_seconds=total,
                       slot_names=graph.slot_names)
