"""Scaling experiments for the certified regularization weight, plus the
strongly-convex rate harness.

Both scans certify randomly drawn order-p models whose Hessian is shifted so
its smallest eigenvalue sits exactly at delta: the quadratic part then never
drives sigma_bar, and the fitted log-log slope isolates how sigma_bar grows
with the higher-order tensor magnitude (at fixed delta) or decays with delta
(at fixed tensor).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .arp_driver import ArpConfig, RunResult, run
from .problems_io import ProblemFunction, ProblemSpec, build_function
from .sos_certify import (CertificationError, ConvexityCase, SosModel,
                          min_sigma_sos)
from .tensor_poly import SymmetricTensor, min_eigenvalue


@dataclass(frozen=True)
class ScanConfig:
    """Shared knobs for both scans.

    scales drives the tensor-magnitude scan (delta held fixed); deltas
    drives the delta scan (tensor magnitude held fixed at scale).  seeds
    independent draws per x-value; all randomness derives from seed.
    """

    n: int = 2
    p: int = 3
    seeds: int = 10
    seed: int = 0
    delta: float = 1.0
    scale: float = 1.0
    scales: Optional[Tuple[float, ...]] = None
    deltas: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not 1 <= self.n <= 4:
            raise ValueError("scan dimension must lie in 1..4")
        if self.p not in (3, 4):
            raise ValueError("scan order p must be 3 or 4")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        for name in ("scales", "deltas"):
            values = getattr(self, name)
            if values is not None:
                values = tuple(float(v) for v in values)
                if not values or any(v <= 0.0 for v in values):
                    raise ValueError(f"{name} must be nonempty and positive")
                object.__setattr__(self, name, values)


@dataclass(frozen=True, eq=False)
class ScanRow:
    row: str  # "cell" or "summary"
    x: float
    seed: Optional[int]
    sigma_bar: Optional[float]
    status: str  # "ok" or the failure reason
    slope: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ScanResult:
    rows: List[ScanRow]
    slope: Optional[float]
    failure_count: int


def _symmetrized_tensor(rng: np.random.Generator, order: int, n: int,
                        magnitude: float) -> SymmetricTensor:
    """Random symmetric tensor normalized so its largest |entry| is magnitude."""
    entries = {}
    peak = 0.0
    for key in itertools.combinations_with_replacement(range(n), order):
        value = float(rng.standard_normal())
        entries[key] = value
        peak = max(peak, abs(value))
    if peak == 0.0:
        peak = 1.0
    return SymmetricTensor(order, n,
                           {k: v / peak * magnitude for k, v in entries.items()})


def _draw_base(rng: np.random.Generator, n: int, p: int,
               magnitude: float) -> Tuple[np.ndarray, np.ndarray, List[SymmetricTensor]]:
    g = rng.standard_normal(n)
    A = rng.standard_normal((n, n))
    H = (A + A.T) / 2.0
    higher = [_symmetrized_tensor(rng, order, n, magnitude)
              for order in range(3, p + 1)]
    return g, H, higher


def _model_at_delta(g: np.ndarray, H: np.ndarray,
                    higher: List[SymmetricTensor], delta: float,
                    p: int) -> SosModel:
    # shift the Hessian so lambda_min lands exactly on delta: the quadratic
    # part then contributes no headroom and sigma_bar isolates the higher
    # orders' effect
    lam, _ = min_eigenvalue(H)
    H_shifted = H + (delta - lam) * np.eye(H.shape[0])
    return SosModel(n=H.shape[0], p=p, f0=0.0, g=g, H_bar=H_shifted,
                    higher=higher, delta=delta, sigma=0.0,
                    case_tag=ConvexityCase.STRONGLY_CONVEX)


def _fit_slope(points: List[Tuple[float, float]]) -> Optional[float]:
    """Least-squares slope of log10(y) against log10(x)."""
    usable = [(x, y) for x, y in points if y > 0.0]
    if len(usable) < 2 or len({x for x, _ in usable}) < 2:
        return None
    lx = np.log10([x for x, _ in usable])
    ly = np.log10([y for _, y in usable])
    return float(np.polyfit(lx, ly, 1)[0])


def _run_scan(config: ScanConfig, x_values: Sequence[float],
              vary_delta: bool) -> ScanResult:
    rows: List[ScanRow] = []
    failures = 0
    summary_points: List[Tuple[float, float]] = []

    # per-seed base draws; the delta scan reuses one draw across all deltas
    bases = {}
    for seed in range(config.seeds):
        rng = np.random.default_rng([config.seed, seed])
        bases[seed] = _draw_base(rng, config.n, config.p,
                                 config.scale if vary_delta else 1.0)

    for xi, x in enumerate(x_values):
        values = []
        for seed in range(config.seeds):
            if vary_delta:
                g, H, higher = bases[seed]
                delta = x
            else:
                rng = np.random.default_rng([config.seed, seed, xi])
                g, H, higher = _draw_base(rng, config.n, config.p, x)
                delta = config.delta
            try:
                model = _model_at_delta(g, H, higher, delta, config.p)
                sigma_bar, _ = min_sigma_sos(model)
            except CertificationError as err:
                failures += 1
                rows.append(ScanRow(row="cell", x=x, seed=seed, sigma_bar=None,
                                    status=f"failed: {err}"))
                continue
            values.append(sigma_bar)
            rows.append(ScanRow(row="cell", x=x, seed=seed,
                                sigma_bar=sigma_bar, status="ok"))
        if values and all(v > 0.0 for v in values):
            gmean = float(np.exp(np.mean(np.log(values))))
        elif values:
            gmean = 0.0
        else:
            gmean = None
        if gmean is not None:
            rows.append(ScanRow(row="summary", x=x, seed=None,
                                sigma_bar=gmean, status="ok"))
            summary_points.append((x, gmean))

    slope = _fit_slope(summary_points)
    if slope is not None:
        rows = [row if row.row == "cell" else
                ScanRow(row=row.row, x=row.x, seed=row.seed,
                        sigma_bar=row.sigma_bar, status=row.status, slope=slope)
                for row in rows]
    return ScanResult(rows=rows, slope=slope, failure_count=failures)


def scan_tensor(config: ScanConfig) -> ScanResult:
    """sigma_bar against tensor magnitude at fixed delta."""
    if config.scales is None:
        raise ValueError("tensor scan needs a scales list")
    return _run_scan(config, config.scales, vary_delta=False)


def scan_delta(config: ScanConfig) -> ScanResult:
    """sigma_bar against delta at fixed tensor magnitude (one draw per seed)."""
    if config.deltas is None:
        raise ValueError("delta scan needs a deltas list")
    return _run_scan(config, config.deltas, vary_delta=True)


@dataclass(frozen=True, eq=False)
class RatePoint:
    epsilon: float
    successful_iterations: int
    total_iterations: int
    f_gaps: List[float]  # f - f_star after each successful iteration
    result: RunResult


def convex_rate(problem: Union[ProblemSpec, ProblemFunction],
                epsilons: Sequence[float],
                p: int = 3,
                x0: Optional[np.ndarray] = None,
                **config_overrides) -> List[RatePoint]:
    """Run the driver at each epsilon on a registered strongly convex problem.

    Refuses problems without the strongly-convex registry flag, since the
    sublinear iteration-growth property being measured assumes it.
    """
    func = build_function(problem) if isinstance(problem, ProblemSpec) else problem
    if not func.strongly_convex:
        raise ValueError(
            f"problem '{func.name}' is not registered as strongly convex; "
            f"the rate experiment requires that flag")
    if not epsilons:
        raise ValueError("epsilon list must be nonempty")
    f_star = func.f_star if func.f_star is not None else 0.0
    points: List[RatePoint] = []
    for eps in epsilons:
        config = ArpConfig(p=p, epsilon=float(eps), x0=x0, **config_overrides)
        result = run(func, config)
        gaps = [rec.f_after - f_star for rec in result.records if rec.success]
        points.append(RatePoint(epsilon=float(eps),
                                successful_iterations=result.successful_count,
                                total_iterations=len(result.records),
                                f_gaps=gaps, result=result))
    return points
