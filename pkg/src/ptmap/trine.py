"""Scripted attack on the trine-state key distribution protocol.

States ``A, B, C`` are the probes at ``m = 0, +2pi/3, -2pi/3``. The first
stage runs at the critical alpha with the minimal N(0); the second stage
(``alpha2 > 0``) follows the Step-2 rotation. Probabilities are computed both
from closed forms and by executing the first-stage circuit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dilation import d1, d2
from .errors import DomainError
from .ptcore import alpha_critical, probe_state
from .simulator import estimate_d, point_seed, run_exact, stage1_circuit
from .threestate import cos2_pt_at_half_period, stage1_map, step2_gate

SIGMA = 2 * np.pi / 3
LABELS = ("A", "B", "C")
PROBES = {"A": 0.0, "B": SIGMA, "C": -SIGMA}


@dataclass
class TrineReport:
    alpha1: float
    alpha2: float
    decisiveness: dict
    inconclusive: float
    posteriors: dict
    rho: dict
    branches: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


def stage1_decisiveness(simulate: bool = True) -> dict:
    """Decisiveness of each trine state in the first stage."""
    if not simulate:
        return {k: d1(m, SIGMA) for k, m in PROBES.items()}
    circ = stage1_circuit(SIGMA, alpha_critical(SIGMA))
    return {k: estimate_d(run_exact(circ, probe_state(m))) for k, m in PROBES.items()}


def trine_attack(alpha2: float = 0.5, simulate: bool = True) -> TrineReport:
    """Full bookkeeping of both stages with equiprobable priors."""
    a1 = alpha_critical(SIGMA)
    dec = stage1_decisiveness(simulate)
    prior = 1 / 3
    success = sum(prior * d for d in dec.values())
    inconclusive = 1 - success
    post = {k: prior * dec[k] / success for k in LABELS}

    rho = {}
    for k, m in PROBES.items():
        s1 = stage1_map(SIGMA, a1, probe_state(m))
        rho[k] = step2_gate(s1).rho

    branches = {"fail": {}, "chi1": {}, "chi2": {}}
    for k in LABELS:
        d = d2(alpha2, rho[k])
        rep = cos2_pt_at_half_period(alpha2, rho[k])
        branches["fail"][k] = post[k] * (1 - d)
        branches["chi1"][k] = post[k] * d * rep.cos2_k13
        branches["chi2"][k] = post[k] * d * rep.cos2_k23

    residuals = {}
    for name, probs in branches.items():
        survivors = sorted((p for p in probs.values() if p > 1e-12), reverse=True)
        eliminated = [k for k, p in probs.items() if p <= 1e-12]
        residuals[name] = {
            "eliminated": eliminated,
            "equiprobability": abs(survivors[0] - survivors[1]) if len(survivors) == 2 else float("nan"),
        }
    s = np.sin(alpha2)
    residuals["fail_ratio"] = abs((1 - d2(alpha2, -np.pi / 2)) - 2 * (1 - d2(alpha2, 0.0)))
    residuals["fail_closed_form"] = abs((1 - d2(alpha2, -np.pi / 2)) - 4 * s / (1 + s) ** 2)
    return TrineReport(a1, alpha2, dec, inconclusive, post, rho, branches, residuals)


@dataclass(frozen=True)
class TrineShots:
    seed: int
    n: int
    decisiveness: dict
    inconclusive: float
    posteriors: dict
    counts: np.ndarray


def _summary(d: np.ndarray) -> np.ndarray:
    """(inconclusive, posterior A, posterior B, posterior C) from a decisiveness triple."""
    return np.array([1 - d.sum() / 3, *(d / d.sum())])


def _stage1_distributions() -> np.ndarray:
    circ = stage1_circuit(SIGMA, alpha_critical(SIGMA))
    return np.array([run_exact(circ, probe_state(PROBES[k])).as_array() for k in LABELS])


def trine_shots(seed: int, n: int = 8192) -> TrineShots:
    """Run the first-stage circuit ``n`` times for each trine state.

    Each state gets its own multinomial draw from one generator seeded with
    ``seed``. Inconclusive rate and posteriors follow from the estimated
    decisiveness triple with equal priors.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = np.random.default_rng(seed)
    counts = np.array([rng.multinomial(n, p / p.sum()) for p in _stage1_distributions()])
    # columns: (data, ancilla) = 00, 01, 10, 11
    d = (counts[:, 0] + counts[:, 2]) / n
    summ = _summary(d)
    return TrineShots(
        seed,
        n,
        {k: float(d[i]) for i, k in enumerate(LABELS)},
        float(summ[0]),
        {k: float(summ[i + 1]) for i, k in enumerate(LABELS)},
        counts,
    )


def shot_sigmas(n: int = 8192) -> np.ndarray:
    """Delta-method standard deviations of (inconclusive, posteriors A, B, C)."""
    d = _stage1_distributions()
    d = d[:, 0] + d[:, 2]
    step = 1e-7
    jac = np.array([(_summary(d + step * e) - _summary(d - step * e)) / (2 * step) for e in np.eye(3)]).T
    cov = jac @ np.diag(d * (1 - d) / n) @ jac.T
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def shots_within_band(shots: TrineShots, width: float = 3.0) -> bool:
    """True when every summary statistic sits within ``width`` standard deviations."""
    observed = np.array([shots.inconclusive, *(shots.posteriors[k] for k in LABELS)])
    expected = np.array([1 / 3, 0.5, 0.25, 0.25])
    return bool(np.all(np.abs(observed - expected) <= width * shot_sigmas(shots.n) + 1e-15))


def shot_seeds(base_seed: int, count: int) -> list[int]:
    return [point_seed(base_seed, i) for i in range(count)]
