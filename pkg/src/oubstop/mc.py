"""Independent Monte Carlo and quadrature verification of a solved boundary.

Paths of the bridge are simulated with the exact Gaussian transition law on
the solver mesh; a path stops at the first mesh node at or above the
boundary and pays the position there, or pays the pinned value z at t = 1
if it never stops. Stopping is monitored at mesh nodes only, which biases
the payoff slightly downward; consistency checks are therefore stated in
standard errors rather than absolute terms.

Paths are generated in fixed-size blocks, one splittable rng stream per
(seed, block) pair, and reduced in block order, so results are bitwise
identical for any worker count. Perturbation tests reuse the same blocks
across boundary shifts (common random numbers), making the suboptimality
comparison a low-variance paired test.

The module also hosts the brute-force quadrature oracle for the drift
kernel, deliberately independent of the closed form in oubstop.kernel.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .bridge import OUBParams, _require_canonical, cond_mean, cond_std, drift
from .kernel import KernelQuery, density
from .solver import BoundarySolution, boundary_eval, log_partition

__all__ = [
    "MCConfig",
    "MCEstimate",
    "PerturbationEntry",
    "PerturbationReport",
    "simulate_stopped_payoff",
    "perturbation_test",
    "kernel_oracle",
]

# Paths are processed in blocks of a size fixed by the step count alone, so
# the block layout (and with it every drawn number) is independent of the
# worker count while large monitoring meshes stay within memory.
_BLOCK_CELLS = 8_388_608


def _block_rows(steps: int) -> int:
    return max(128, min(16384, _BLOCK_CELLS // max(steps, 1)))


@dataclass(frozen=True)
class MCConfig:
    paths: int
    time_nodes: int | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.time_nodes is not None and self.time_nodes < 2:
            raise ValueError("time_nodes must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int


@dataclass(frozen=True)
class PerturbationEntry:
    """Estimate for the rule 'stop at boundary + delta', paired against the
    unshifted rule on the same paths."""

    delta: float
    estimate: MCEstimate
    mean_diff: float
    se_diff: float


@dataclass(frozen=True)
class PerturbationReport:
    baseline: MCEstimate
    entries: tuple[PerturbationEntry, ...]


def _estimate(payoffs: np.ndarray) -> MCEstimate:
    n = payoffs.size
    if np.all(payoffs == payoffs[0]):
        # exact reduction for degenerate rules (immediate stop, never stop)
        return MCEstimate(mean=float(payoffs[0]), std_error=0.0, n=n)
    mean = float(np.mean(payoffs))
    se = float(np.std(payoffs, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean=mean, std_error=se, n=n)


def _monitor_nodes(sol: BoundarySolution, t0: float, cfg: MCConfig):
    grid = sol.grid.nodes if cfg.time_nodes is None \
        else log_partition(cfg.time_nodes).nodes
    nodes = np.concatenate(([t0], grid[grid > t0]))
    return nodes, boundary_eval(sol, nodes)


def _step_coefficients(params: OUBParams, nodes: np.ndarray):
    t1 = nodes[:-1]
    t2 = nodes[1:]
    shift = cond_mean(params, t1, np.zeros_like(t1), t2)
    slope = cond_mean(params, t1, np.ones_like(t1), t2) - shift
    sd = cond_std(params, t1, t2)
    return slope, shift, sd


def _block_paths(x0: float, slope, shift, sd, rng: np.random.Generator,
                 size: int) -> np.ndarray:
    steps = slope.size
    x = np.empty((size, steps + 1))
    x[:, 0] = x0
    noise = rng.standard_normal((size, steps))
    for k in range(steps):
        x[:, k + 1] = slope[k] * x[:, k] + shift[k] + sd[k] * noise[:, k]
    return x


def _stopped_payoffs(paths: np.ndarray, thresholds: np.ndarray,
                     z: float) -> np.ndarray:
    hit = paths >= thresholds[None, :]
    stopped = hit.any(axis=1)
    first = hit.argmax(axis=1)
    rows = np.arange(paths.shape[0])
    return np.where(stopped, paths[rows, first], z)


def _run_payoffs(params: OUBParams, sol: BoundarySolution, t0: float,
                 x0: float, cfg: MCConfig, deltas: tuple[float, ...]):
    nodes, bounds = _monitor_nodes(sol, t0, cfg)
    slope, shift, sd = _step_coefficients(params, nodes)
    block = _block_rows(nodes.size - 1)
    n_blocks = (cfg.paths + block - 1) // block
    sizes = [min(block, cfg.paths - b * block) for b in range(n_blocks)]

    def run_block(b: int):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(b,)))
        paths = _block_paths(x0, slope, shift, sd, rng, sizes[b])
        return [_stopped_payoffs(paths, bounds + d, params.z) for d in deltas]

    if cfg.workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_block = list(pool.map(run_block, range(n_blocks)))
    else:
        per_block = [run_block(b) for b in range(n_blocks)]

    return [np.concatenate([blk[i] for blk in per_block])
            for i in range(len(deltas))]


def simulate_stopped_payoff(params: OUBParams, sol: BoundarySolution,
                            t0: float, x0: float,
                            cfg: MCConfig) -> MCEstimate:
    """Monte Carlo estimate of the payoff of the boundary rule started at
    (t0, x0).

    Every path ends at exactly z if it never crosses; a start at or above
    the boundary stops immediately with zero standard error.
    """
    _require_canonical(params)
    if not (0.0 <= t0 < 1.0):
        raise ValueError("t0 must be in [0, 1)")
    payoffs = _run_payoffs(params, sol, t0, x0, cfg, (0.0,))[0]
    return _estimate(payoffs)


def perturbation_test(params: OUBParams, sol: BoundarySolution,
                      deltas, t0: float, x0: float,
                      cfg: MCConfig) -> PerturbationReport:
    """Evaluate shifted rules 'stop at boundary + delta' with common random
    numbers across all deltas.

    The delta = 0 column is bit-identical to simulate_stopped_payoff with
    the same config. If the solved boundary is optimal, no shift improves
    the paired mean beyond noise.
    """
    _require_canonical(params)
    if not (0.0 <= t0 < 1.0):
        raise ValueError("t0 must be in [0, 1)")
    deltas = tuple(float(d) for d in deltas)
    all_payoffs = _run_payoffs(params, sol, t0, x0, cfg, (0.0,) + deltas)
    base = all_payoffs[0]
    entries = []
    for d, pays in zip(deltas, all_payoffs[1:]):
        diff = pays - base
        n = diff.size
        se = float(np.std(diff, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        entries.append(PerturbationEntry(
            delta=d, estimate=_estimate(pays),
            mean_diff=float(np.mean(diff)), se_diff=se))
    return PerturbationReport(baseline=_estimate(base), entries=tuple(entries))


def kernel_oracle(params: OUBParams, q: KernelQuery) -> float:
    """Quadrature ground truth for the drift kernel:

        integral_{x2}^{inf} drift(t2, w) * N(w; m, v^2) dw

    by adaptive quadrature on [x2, m + 12v]; the discarded tail carries a
    Gaussian mass below 1e-30 of the total. Independent of the closed form
    in oubstop.kernel.
    """
    _require_canonical(params)
    if q.t2 == q.t1:
        return drift(params, q.t2, q.x1) * (1.0 if q.x1 >= q.x2 else 0.0)
    m = cond_mean(params, q.t1, q.x1, q.t2)
    v = cond_std(params, q.t1, q.t2)
    hi = m + 12.0 * v
    if q.x2 >= hi:
        return 0.0

    def integrand(w: float) -> float:
        return drift(params, q.t2, w) * density((w - m) / v) / v

    inner = [p for p in (m - 4.0 * v, m, m + 4.0 * v) if q.x2 < p < hi]
    result, _ = quad(integrand, q.x2, hi, epsabs=1e-13, epsrel=1e-12,
                     limit=200, points=inner or None)
    return float(result)
