"""Integrated autocorrelation time, ESS and the efficiency triple.

The autocorrelation time is estimated from the spectral density at
frequency zero of an autoregressive fit: AR(p) coefficients come from least
squares on the lagged chain, the order is chosen by AIC over
p in 0..min(floor(10*log10(N)), (N-1)//2), and
tau = [sigma_p^2 / (1 - sum(phi))^2] / var(chain), clamped to >= 1 so that
ESS never exceeds the chain length.  A constant column reports tau = +inf
and ESS = 0 rather than failing, so the blocking search can keep running
when a sampler is momentarily stuck.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

INF = float("inf")


def _ar_spectrum_tau(x: np.ndarray) -> float:
    n = x.shape[0]
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var == 0.0:
        return INF
    p_max = min(int(10.0 * math.log10(n)), n - 1, (n - 1) // 2)
    if p_max < 1:
        return 1.0
    n_fit = n - p_max
    # All candidate orders are fit on the same n_fit rows so AIC is comparable.
    lags = np.empty((n_fit, p_max))
    for j in range(p_max):
        lags[:, j] = xc[p_max - 1 - j: n - 1 - j]
    y = xc[p_max:]
    gram = lags.T @ lags
    cross = lags.T @ y
    yy = float(y @ y)

    best_aic = n_fit * math.log(max(yy / n_fit, 1e-300)) + 2.0
    best_p = 0
    best_phi = None
    best_rss = yy
    for p in range(1, p_max + 1):
        try:
            phi = np.linalg.solve(gram[:p, :p], cross[:p])
        except np.linalg.LinAlgError:
            continue
        rss = yy - float(phi @ cross[:p])
        if rss <= 0.0:
            rss = 1e-300
        aic = n_fit * math.log(rss / n_fit) + 2.0 * (p + 1)
        if aic < best_aic:
            best_aic = aic
            best_p = p
            best_phi = phi
            best_rss = rss
    if best_p == 0:
        spec0 = yy / n_fit
    else:
        phi_sum = float(best_phi.sum())
        if not math.isfinite(phi_sum) or phi_sum >= 1.0 - 1e-12:
            return INF  # explosive fit: effectively unmixed
        sigma2 = best_rss / n_fit
        spec0 = sigma2 / (1.0 - phi_sum) ** 2
    return spec0 / var


def integrated_autocorrelation_time(chain) -> float:
    """Iterations per effectively independent sample for a scalar chain.

    Returns +inf for a zero-variance (stuck) chain; otherwise the AR-spectral
    estimate clamped to >= 1.
    """
    x = np.ascontiguousarray(chain, dtype=float)
    if x.ndim != 1:
        raise ValueError("chain must be one-dimensional")
    if x.shape[0] < 10:
        raise ValueError("need at least 10 samples to estimate tau")
    tau = _ar_spectrum_tau(x)
    if tau == INF:
        return INF
    return max(tau, 1.0)


@dataclass
class EfficiencyReport:
    """Per-parameter mixing plus the A (algorithmic), C (cost), E = A/C triple.

    ``ess_per_10k`` and ``runtime_per_10k`` restate A and C per 10,000
    iterations for table-style presentation.
    """

    tau: np.ndarray
    ess: np.ndarray
    n_iterations: int
    algorithmic_efficiency: float      # A = min over parameters of 1/tau
    seconds_per_iteration: float       # C
    efficiency: float                  # E = A / C
    slot_names: tuple[str, ...] = field(default=())

    @property
    def ess_per_10k(self) -> float:
        return 10_000.0 * self.algorithmic_efficiency

    @property
    def runtime_per_10k(self) -> float:
        return 10_000.0 * self.seconds_per_iteration

    @property
    def slowest_parameter(self) -> str:
        i = int(np.argmax(self.tau))
        return self.slot_names[i] if self.slot_names else str(i)

    def to_dict(self) -> dict:
        return {
            "tau": [None if t == INF else t for t in self.tau.tolist()],
            "ess": self.ess.tolist(),
            "n_iterations": self.n_iterations,
            "algorithmic_efficiency": self.algorithmic_efficiency,
            "seconds_per_iteration": self.seconds_per_iteration,
            "efficiency": self.efficiency,
            "ess_per_10k": self.ess_per_10k,
            "runtime_per_10k": self.runtime_per_10k,
            "slowest_parameter": self.slowest_parameter,
            "slot_names": list(self.slot_names),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def efficiency_report(chain) -> EfficiencyReport:
    """Estimate tau per column and compose the efficiency triple."""
    samples = chain.samples
    n = samples.shape[0]
    if n < 10:
        raise ValueError("need at least 10 iterations for an efficiency report")
    d = samples.shape[1]
    tau = np.empty(d)
    ess = np.empty(d)
    for j in range(d):
        t = integrated_autocorrelation_time(samples[:, j])
        tau[j] = t
        ess[j] = 0.0 if t == INF else n / t
    a = float(min(0.0 if t == INF else 1.0 / t for t in tau))
    c = chain.sampling_seconds / n
    if a == 0.0:
        e = 0.0
    elif c > 0.0:
        e = a / c
    else:
        e = INF
    return EfficiencyReport(
        tau=tau,
        ess=ess,
        n_iterations=n,
        algorithmic_efficiency=a,
        seconds_per_iteration=c,
        efficiency=e,
        slot_names=tuple(chain.slot_names),
    )
