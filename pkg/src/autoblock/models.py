"""Benchmark model generators: correlation toys and synthetic hierarchies.

The toy models are pure prior structures (no likelihood) whose posterior
correlation pattern is planted exactly, so block-recovery can be judged
against ground truth.  The applied-style models (random effects, state
space, spatial) generate their observations synthetically from fixed,
documented parameter values; the same seed always reproduces the same data.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .graph import ModelGraph, build_graph
from .samplers import SamplerPlan

# Synthetic-data generating values, fixed so results are stable across runs.
RE_P_TRUE = (2.0, 2.0)          # Beta parameters behind the binomial probs
RE_BINOMIAL_SIZE = 10
SS_A_TRUE = 0.3                 # AR intercept
SS_B_TRUE = 0.8                 # AR autocorrelation
SS_SIGMA_PROC_TRUE = 0.4
SS_SIGMA_OBS_TRUE = 0.4
SP_MU_TRUE = 1.0
SP_SIGMA_TRUE = 1.0
SP_RANGE_TRUE = 0.3


def compound_symmetric_cov(size: int, rho: float) -> np.ndarray:
    """Unit-variance covariance with constant off-diagonal correlation."""
    cov = np.full((size, size), float(rho))
    np.fill_diagonal(cov, 1.0)
    return cov


def _mvn_node(name, cov):
    return {"name": name, "kind": "parameter", "family": "mvnormal",
            "params": {"mean": 0.0, "cov": cov.tolist()}}


def iid_normal(d: int) -> ModelGraph:
    """d independent standard-normal parameters (timing baseline)."""
    nodes = [{"name": f"x{i}", "kind": "parameter", "family": "normal",
              "params": {"mean": 0.0, "sd": 1.0}} for i in range(d)]
    return build_graph({"nodes": nodes})


def iid_gamma(d: int) -> ModelGraph:
    """d independent Gamma(2, 1) parameters (timing baseline)."""
    nodes = [{"name": f"x{i}", "kind": "parameter", "family": "gamma",
              "params": {"shape": 2.0, "rate": 1.0}} for i in range(d)]
    return build_graph({"nodes": nodes})


def fixed_correlation_blocks(rho: float,
                             sizes: tuple[int, ...] = (32, 16, 8, 4, 2),
                             n_scalar: int = 2) -> ModelGraph:
    """Disjoint compound-symmetric groups at one correlation, plus scalars.

    Defaults give the 64-parameter layout: groups of 32/16/8/4/2 at
    pairwise correlation ``rho`` and two uncorrelated univariate normals.
    """
    if not abs(rho) < 1:
        raise ValueError(f"need |rho| < 1, got {rho}")
    nodes = []
    for gi, size in enumerate(sizes):
        nodes.append(_mvn_node(f"g{gi}", compound_symmetric_cov(size, rho)))
    for i in range(n_scalar):
        nodes.append({"name": f"u{i}", "kind": "parameter",
                      "family": "normal", "params": {"mean": 0.0, "sd": 1.0}})
    return build_graph({"nodes": nodes})


def planted_partition(sizes: tuple[int, ...] = (32, 16, 8, 4, 2),
                      n_scalar: int = 2) -> tuple[tuple[int, ...], ...]:
    """The true grouping of ``fixed_correlation_blocks`` slots."""
    groups = []
    start = 0
    for size in sizes:
        groups.append(tuple(range(start, start + size)))
        start += size
    for i in range(n_scalar):
        groups.append((start + i,))
    return tuple(groups)


def varying_correlation_blocks(n: int = 2) -> ModelGraph:
    """Nine size-n groups at correlations 0.1..0.9 plus n independent."""
    if n < 2:
        raise ValueError("group size must be >= 2")
    nodes = []
    for gi in range(9):
        rho = (gi + 1) / 10
        nodes.append(_mvn_node(f"g{gi}", compound_symmetric_cov(n, rho)))
    for i in range(n):
        nodes.append({"name": f"u{i}", "kind": "parameter",
                      "family": "normal", "params": {"mean": 0.0, "sd": 1.0}})
    return build_graph({"nodes": nodes})


def exponential_decay_mvn(rho: float, d: int) -> ModelGraph:
    """Single MVN prior with covariance rho^|i-j| (AR(1)-style decay)."""
    if not abs(rho) < 1:
        raise ValueError(f"need |rho| < 1, got {rho}")
    idx = np.arange(d)
    cov = np.power(float(rho), np.abs(idx[:, None] - idx[None, :]))
    return build_graph({"nodes": [_mvn_node("theta", cov)]})


def random_effects_model(groups: int = 2, per_group: int = 16,
                         seed: int = 0) -> tuple[ModelGraph, SamplerPlan]:
    """Beta-binomial random effects with per-group (a_i, b_i) hyperpriors.

    Each group's binomial probabilities are exchangeable draws from
    Beta(a_i, b_i); the (a_i, b_i) parameterization rides a posterior ridge,
    so the informed plan blocks each pair.
    """
    if groups < 1 or per_group < 1:
        raise ValueError("groups and per_group must be >= 1")
    rng = np.random.default_rng(seed)
    nodes = []
    pair_slots = []
    slot = 0
    for i in range(groups):
        nodes.append({"name": f"a{i}", "kind": "parameter", "family": "gamma",
                      "params": {"shape": 2.0, "rate": 0.5}})
        nodes.append({"name": f"b{i}", "kind": "parameter", "family": "gamma",
                      "params": {"shape": 2.0, "rate": 0.5}})
        pair_slots.append((slot, slot + 1))
        slot += 2
        for j in range(per_group):
            nodes.append({"name": f"p{i}_{j}", "kind": "parameter",
                          "family": "beta",
                          "params": {"a": f"a{i}", "b": f"b{i}"}})
            slot += 1
    for i in range(groups):
        for j in range(per_group):
            p_true = rng.beta(*RE_P_TRUE)
            y = int(rng.binomial(RE_BINOMIAL_SIZE, p_true))
            nodes.append({"name": f"y{i}_{j}", "kind": "data",
                          "family": "binomial",
                          "params": {"size": RE_BINOMIAL_SIZE,
                                     "prob": f"p{i}_{j}"},
                          "value": y})
    graph = build_graph({"nodes": nodes})
    singles = tuple((s,) for s in range(graph.d)
                    if not any(s in pair for pair in pair_slots))
    informed = SamplerPlan(graph.d, tuple(pair_slots) + singles)
    return graph, informed


def state_space_model(parameterization: str = "correlated",
                      length: int = 100, seed: int = 0,
                      ) -> tuple[ModelGraph, Optional[SamplerPlan]]:
    """Linear Gaussian state-space model with a latent AR(1) chain.

    ``correlated`` exposes the AR intercept and autocorrelation directly
    (latent mean a + b*x[t-1]; strongly correlated posterior); the informed
    plan blocks that pair.  ``independent`` exposes the process mean
    (latent mean m + b*(x[t-1] - m)), whose posterior is nearly
    uncorrelated with b, and has no informed plan.
    """
    if parameterization not in ("correlated", "independent"):
        raise ValueError(f"unknown parameterization {parameterization!r}")
    if length < 2:
        raise ValueError("length must be >= 2")
    rng = np.random.default_rng(seed)
    a, b = SS_A_TRUE, SS_B_TRUE
    sp, so = SS_SIGMA_PROC_TRUE, SS_SIGMA_OBS_TRUE
    x = np.empty(length)
    x[0] = a / (1.0 - b) + rng.standard_normal() * sp / math.sqrt(1.0 - b * b)
    for t in range(1, length):
        x[t] = a + b * x[t - 1] + rng.standard_normal() * sp
    y = x + rng.standard_normal(length) * so

    correlated = parameterization == "correlated"
    level = "a" if correlated else "m"
    nodes = [
        {"name": level, "kind": "parameter", "family": "normal",
         "params": {"mean": 0.0, "sd": 10.0}},
        {"name": "b", "kind": "parameter", "family": "normal",
         "params": {"mean": 0.0, "sd": 1.0}},
        {"name": "sigma_proc", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 0.5}},
        {"name": "sigma_obs", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 0.5}},
        {"name": "x0", "kind": "parameter", "family": "normal",
         "params": {"mean": 0.0, "sd": 10.0}},
    ]
    for t in range(1, length):
        if correlated:
            nodes.append({"name": f"mean{t}", "kind": "deterministic",
                          "op": "affine", "inputs": [f"x{t - 1}"],
                          "params": {"coefficients": ["b"], "offset": "a"}})
        else:
            nodes.append({"name": f"dev{t}", "kind": "deterministic",
                          "op": "affine", "inputs": [f"x{t - 1}", "m"],
                          "params": {"coefficients": [1.0, -1.0],
                                     "offset": 0.0}})
            nodes.append({"name": f"mean{t}", "kind": "deterministic",
                          "op": "affine", "inputs": [f"dev{t}"],
                          "params": {"coefficients": ["b"], "offset": "m"}})
        nodes.append({"name": f"x{t}", "kind": "parameter",
                      "family": "normal",
                      "params": {"mean": f"mean{t}", "sd": "sigma_proc"}})
    for t in range(length):
        nodes.append({"name": f"y{t}", "kind": "data", "family": "normal",
                      "params": {"mean": f"x{t}", "sd": "sigma_obs"},
                      "value": float(y[t])})
    graph = build_graph({"nodes": nodes})
    informed = None
    if correlated:
        groups = ((0, 1),) + tuple((s,) for s in range(2, graph.d))
        informed = SamplerPlan(graph.d, groups)
    return graph, informed


def spatial_model(sites: int = 148, seed: int = 0) -> ModelGraph:
    """Latent Gaussian field with exponential-distance covariance.

    Random planar coordinates fix the distance matrix; the field's scale and
    range parameters trade off in the covariance, and Poisson counts observe
    exp(field) at each site.
    """
    if sites < 2:
        raise ValueError("sites must be >= 2")
    rng = np.random.default_rng(seed)
    coords = rng.random((sites, 2))
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    k_true = SP_SIGMA_TRUE ** 2 * np.exp(-dist / SP_RANGE_TRUE)
    k_true[np.diag_indices(sites)] += 1e-8
    g_true = SP_MU_TRUE + np.linalg.cholesky(k_true) @ rng.standard_normal(sites)
    counts = rng.poisson(np.exp(g_true))

    nodes = [
        {"name": "mu", "kind": "parameter", "family": "normal",
         "params": {"mean": 0.0, "sd": 10.0}},
        {"name": "sigma", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 0.5}},
        {"name": "range", "kind": "parameter", "family": "gamma",
         "params": {"shape": 2.0, "rate": 0.5}},
        {"name": "K", "kind": "deterministic", "op": "expcov",
         "params": {"sigma": "sigma", "range": "range",
                    "distances": dist.tolist()}},
        {"name": "g", "kind": "parameter", "family": "mvnormal",
         "params": {"mean": "mu", "cov": "K"}},
        {"name": "lam", "kind": "deterministic", "op": "exp",
         "inputs": ["g"], "params": {}},
    ]
    for i in range(sites):
        nodes.append({"name": f"y{i}", "kind": "data", "family": "poisson",
                      "params": {"rate": f"lam[{i}]"},
                      "value": int(counts[i])})
    return build_graph({"nodes": nodes})


# Named examples for the CLI and benchmark suites.  Each builder maps a seed
# to (graph, informed plan or None).
Builder = Callable[[int], tuple[ModelGraph, Optional[SamplerPlan]]]


def _toy_fixed(rho: float) -> Builder:
    def build(seed: int):
        graph = fixed_correlation_blocks(rho)
        return graph, SamplerPlan(graph.d, planted_partition())
    return build


def _toy_varying(n: int) -> Builder:
    def build(seed: int):
        return varying_correlation_blocks(n), None
    return build


EXAMPLES: dict[str, Builder] = {
    "fixed-rho-0.2": _toy_fixed(0.2),
    "fixed-rho-0.5": _toy_fixed(0.5),
    "fixed-rho-0.8": _toy_fixed(0.8),
    "varying-rho-2": _toy_varying(2),
    "varying-rho-5": _toy_varying(5),
    "varying-rho-10": _toy_varying(10),
    "exp-decay-100": lambda seed: (exponential_decay_mvn(0.5, 100), None),
    "random-effects": lambda seed: random_effects_model(seed=seed),
    "state-space-correlated": lambda seed: state_space_model(
        "correlated", seed=seed),
    "state-space-independent": lambda seed: state_space_model(
        "independent", seed=seed),
    "spatial": lambda seed: (spatial_model(seed=seed), None),
}


def get_example(name: str, seed: int = 0):
    """Build a named example; returns (graph, informed plan or None)."""
    try:
        builder = EXAMPLES[name]
    except KeyError:
        known = ", ".join(sorted(EXAMPLES))
        raise KeyError(f"unknown example {name!r}; available: {known}")
    return builder(seed)
