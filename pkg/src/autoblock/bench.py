"""Benchmark harness comparing static schemes against the blocking search.

Every row reports effective samples and runtime normalized to 10,000
iterations plus their ratio (effective samples per second), and each report
embeds environment metadata because the efficiency numbers are specific to
the machine that produced them.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .diagnostics import efficiency_report
from .models import (
    exponential_decay_mvn,
    fixed_correlation_blocks,
    iid_gamma,
    iid_normal,
    planted_partition,
    random_effects_model,
    spatial_model,
    state_space_model,
    varying_correlation_blocks,
)
from .samplers import SamplerPlan, run_mcmc
from .search import AutoblockConfig, autoblock

logger = logging.getLogger("autoblock.bench")

ALL_SCALAR = "AllScalar"
ALL_BLOCKED = "AllBlocked"
INFORMED = "Informed"
AUTO_BLOCK = "AutoBlock"


def environment_metadata() -> dict:
    clock = time.get_clock_info("perf_counter")
    return {
        "engine_version": __version__,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor(),
        "numpy": np.__version__,
        "clock": {"implementation": clock.implementation,
                  "resolution": clock.resolution,
                  "monotonic": clock.monotonic},
    }


@dataclass
class BenchmarkRow:
    model: str
    scheme: str
    ess_per_10k: float = float("nan")
    runtime_per_10k: float = float("nan")
    efficiency: float = float("nan")
    status: str = "ok"
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "scheme": self.scheme,
            "ess_per_10k": self.ess_per_10k,
            "runtime_per_10k": self.runtime_per_10k,
            "efficiency": self.efficiency,
            "status": self.status,
            "detail": self.detail,
        }


@dataclass
class BenchmarkReport:
    suite: str
    iterations: int
    seed: int
    rows: list[BenchmarkRow] = field(default_factory=list)
    environment: dict = field(default_factory=environment_metadata)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "iterations": self.iterations,
            "seed": self.seed,
            "rows": [r.to_dict() for r in self.rows],
            "environment": self.environment,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["model", "scheme", "ess_per_10k", "runtime_per_10k",
                         "efficiency", "status", "detail"])
        for r in self.rows:
            writer.writerow([r.model, r.scheme, f"{r.ess_per_10k:.6g}",
                             f"{r.runtime_per_10k:.6g}",
                             f"{r.efficiency:.6g}", r.status, r.detail])
        return buf.getvalue()

    def write(self, prefix):
        with open(f"{prefix}.csv", "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())
        with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
            fh.write(self.to_json(indent=2))


def _measure(model_name, scheme, graph, plan, n, seed, detail="") -> BenchmarkRow:
    chain = run_mcmc(graph, plan, n, seed)
    rep = efficiency_report(chain)
    return BenchmarkRow(model=model_name, scheme=scheme,
                        ess_per_10k=rep.ess_per_10k,
                        runtime_per_10k=rep.runtime_per_10k,
                        efficiency=rep.efficiency, detail=detail)


def compare_schemes(model_name, graph, informed, n, seed,
                    include_autoblock=True,
                    autoblock_config=None) -> list[BenchmarkRow]:
    """Score AllScalar, AllBlocked, Informed (if given) and AutoBlock."""
    jobs = [(ALL_SCALAR, SamplerPlan.all_scalar(graph.d), "")]
    if graph.d > 1:
        jobs.append((ALL_BLOCKED, SamplerPlan.all_blocked(graph.d), ""))
    if informed is not None:
        jobs.append((INFORMED, informed, ""))
    rows = []
    for scheme, plan, detail in jobs:
        rows.append(_run_row(model_name, scheme, graph, plan, n, seed, detail))
    if include_autoblock:
        rows.append(autoblock_row(model_name, graph, n, seed, autoblock_config))
    return rows


def _run_row(model_name, scheme, graph, plan, n, seed, detail="") -> BenchmarkRow:
    try:
        return _measure(model_name, scheme, graph, plan, n, seed, detail)
    except Exception as exc:  # partial results with per-row status
        logger.warning("%s/%s failed: %s", model_name, scheme, exc)
        return BenchmarkRow(model=model_name, scheme=scheme, status="error",
                            detail=str(exc))


def autoblock_row(model_name, graph, n, seed,
                  config: AutoblockConfig | None = None) -> BenchmarkRow:
    """Run the blocking search, then measure its final plan on a fresh run."""
    try:
        if config is None:
            config = AutoblockConfig(iterations_per_run=n, seed=seed)
        trace = autoblock(graph, config)
        return _measure(model_name, AUTO_BLOCK, graph, trace.final_plan, n,
                        [seed, 999], detail=trace.final_plan.describe())
    except Exception as exc:
        logger.warning("%s/%s failed: %s", model_name, AUTO_BLOCK, exc)
        return BenchmarkRow(model=model_name, scheme=AUTO_BLOCK,
                            status="error", detail=str(exc))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_timing_sweep(n, seed, dims=(25, 50, 100)) -> BenchmarkReport:
    """Runtime curves for scalar vs block sampling across model structure."""
    report = BenchmarkReport("timing-sweep", n, seed)
    families = [
        ("univariate-normal", iid_normal),
        ("univariate-gamma", iid_gamma),
        ("mvn", lambda d: exponential_decay_mvn(0.5, d)),
    ]
    for fam_name, make in families:
        for d in dims:
            graph = make(d)
            name = f"{fam_name}-d{d}"
            report.rows.append(_run_row(name, ALL_SCALAR, graph,
                                        SamplerPlan.all_scalar(d), n, seed))
            report.rows.append(_run_row(name, ALL_BLOCKED, graph,
                                        SamplerPlan.all_blocked(d), n, seed))
    return report


def suite_toy_fixed_rho(n, seed, rhos=(0.2, 0.5, 0.8)) -> BenchmarkReport:
    report = BenchmarkReport("toy-fixed-rho", n, seed)
    for rho in rhos:
        graph = fixed_correlation_blocks(rho)
        informed = SamplerPlan(graph.d, planted_partition())
        report.rows.extend(compare_schemes(
            f"fixed-rho-{rho}", graph, informed, n, seed))
    return report


def suite_toy_varying_rho(n, seed, sizes=(2, 5, 10)) -> BenchmarkReport:
    report = BenchmarkReport("toy-varying-rho", n, seed)
    for size in sizes:
        graph = varying_correlation_blocks(size)
        report.rows.extend(compare_schemes(
            f"varying-rho-{size}", graph, None, n, seed))
    return report


def suite_random_effects(n, seed) -> BenchmarkReport:
    report = BenchmarkReport("random-effects", n, seed)
    graph, informed = random_effects_model(seed=seed)
    report.rows.extend(compare_schemes("random-effects", graph, informed,
                                       n, seed))
    return report


def suite_state_space(n, seed) -> BenchmarkReport:
    report = BenchmarkReport("state-space", n, seed)
    for parameterization in ("independent", "correlated"):
        graph, informed = state_space_model(parameterization, seed=seed)
        report.rows.extend(compare_schemes(
            f"state-space-{parameterization}", graph, informed, n, seed))
    return report


def suite_spatial(n, seed, sites=148) -> BenchmarkReport:
    report = BenchmarkReport("spatial", n, seed)
    graph = spatial_model(sites=sites, seed=seed)
    report.rows.extend(compare_schemes("spatial", graph, None, n, seed))
    return report


def suite_algorithmic_sweep(n, seed, dims=(2, 16),
                            rhos=(0.0, 0.5, 0.9)) -> BenchmarkReport:
    """Mixing-rate curves (min tau^-1 under all-scalar) per (d, rho)."""
    report = BenchmarkReport("algorithmic-sweep", n, seed)
    for structure, make in (
            ("compound", fixed_correlation_blocks),
            ("exp-decay", exponential_decay_mvn)):
        for d in dims:
            for rho in rhos:
                if structure == "compound":
                    graph = fixed_correlation_blocks(rho, sizes=(d,),
                                                     n_scalar=0)
                else:
                    graph = exponential_decay_mvn(rho, d)
                name = f"{structure}-d{d}-rho{rho}"
                report.rows.append(_run_row(
                    name, ALL_SCALAR, graph, SamplerPlan.all_scalar(d),
                    n, seed))
    return report


SUITES = {
    "timing-sweep": suite_timing_sweep,
    "toy-fixed-rho": suite_toy_fixed_rho,
    "toy-varying-rho": suite_toy_varying_rho,
    "random-effects": suite_random_effects,
    "state-space": suite_state_space,
    "spatial": suite_spatial,
    "algorithmic-sweep": suite_algorithmic_sweep,
}


def run_suite(name, n, seed) -> BenchmarkReport:
    try:
        fn = SUITES[name]
    except KeyError:
        known = ", ".join(sorted(SUITES))
        raise KeyError(f"unknown suite {name!r}; available: {known}")
    return fn(n, seed)
