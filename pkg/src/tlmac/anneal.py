"""Simulated annealing over weight-group placement to cut pool-to-switch wiring.

A route exists from array e to output p when any select index stores a group
at e that output p consumes. Swapping the groups two arrays hold at the same
select index can merge their wiring, so the move set is exactly that swap
(one side may be a vacant slot, which turns the swap into a move).

The acceptance test compares each candidate against the best count seen so
far rather than the current one, with an extra -1 in the exponent numerator,
and the temperature follows T = I / (i + 1)^alpha. Both are deliberate; a
conventional compare-to-current mode is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .placement import PlacementPlan, VACANT


@dataclass
class AnnealConfig:
    """Iteration budget, cooling exponent and RNG seed for one run."""

    iterations: int
    alpha: float = 1.4
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iteration count must be >= 0, got {self.iterations}")
        if self.alpha <= 0:
            raise ValueError(f"cooling exponent must be > 0, got {self.alpha}")


@dataclass
class AnnealTrace:
    """Best-seen route counts sampled over the run. Monotone by construction."""

    samples: list[tuple[int, int]] = field(default_factory=list)
    initial: int = 0
    final: int = 0


def count_routes(routing: np.ndarray) -> int:
    """Number of (array, output) pairs wired for any select index."""
    if routing.ndim != 3:
        raise ValueError(f"routing matrix must be 3-D, got shape {routing.shape}")
    return int(routing.any(axis=1).sum())


def anneal(plan: PlacementPlan, cfg: AnnealConfig, *,
           compare_to_current: bool = False,
           sample_every: int = 0,
           verify_counts: bool = False) -> tuple[PlacementPlan, AnnealTrace]:
    """Optimise routing by annealed slot swaps; returns the best plan seen.

    Per iteration the RNG is consumed in a fixed order (cluster, first array,
    second array, acceptance uniform) so runs are reproducible from the seed.
    The walk itself may accept worsening moves, so the returned plan is the
    snapshot at the lowest route count rather than the final walk state.

    With ``verify_counts`` the incrementally tracked route count is checked
    against a full recount at every sampled iteration.
    """
    current = plan.copy()
    routing = current.routing
    occupancy = current.occupancy
    location = current.location
    n_arrays, n_clusters, _ = routing.shape

    # per-(array, output) count of select indices that wire the pair
    col_count = routing.sum(axis=1, dtype=np.int64)
    total = int((col_count > 0).sum())
    initial = total
    if verify_counts and total != count_routes(routing):
        raise RuntimeError("initial incremental route count diverged from recount")

    best = total
    best_plan = current.copy()
    samples: list[tuple[int, int]] = [(0, best)]

    rng = np.random.default_rng(cfg.seed)
    for i in range(1, cfg.iterations + 1):
        temperature = cfg.iterations / (i + 1) ** cfg.alpha
        c = int(rng.integers(n_clusters))
        e0 = int(rng.integers(n_arrays))
        e1 = int(rng.integers(n_arrays))
        uniform = rng.random()

        if e0 != e1:
            row0 = routing[e0, c]
            row1 = routing[e1, c]
            new0 = col_count[e0] - row0 + row1
            new1 = col_count[e1] - row1 + row0
            delta = (int((new0 > 0).sum()) - int((col_count[e0] > 0).sum())
                     + int((new1 > 0).sum()) - int((col_count[e1] > 0).sum()))
            candidate = total + delta
        else:
            candidate = total

        reference = total if compare_to_current else best
        accept = candidate < reference
        if not accept:
            accept = uniform < math.exp((reference - candidate - 1) / temperature)

        if accept and e0 != e1:
            col_count[e0] = new0
            col_count[e1] = new1
            tmp = routing[e0, c].copy()
            routing[e0, c] = routing[e1, c]
            routing[e1, c] = tmp
            u0 = int(occupancy[e0, c])
            u1 = int(occupancy[e1, c])
            occupancy[e0, c], occupancy[e1, c] = u1, u0
            if u0 != VACANT:
                location[(c, u0)] = e1
            if u1 != VACANT:
                location[(c, u1)] = e0
            total = candidate
            if total < best:
                best = total
                best_plan = current.copy()
                samples.append((i, best))

        if sample_every and i % sample_every == 0:
            if verify_counts and total != count_routes(routing):
                raise RuntimeError(
                    f"iteration {i}: incremental route count {total} diverged "
                    f"from recount {count_routes(routing)}"
                )
            samples.append((i, best))

    if samples[-1][0] != cfg.iterations:
        samples.append((cfg.iterations, best))
    trace = AnnealTrace(samples=samples, initial=initial, final=best)
    return best_plan, trace


def route_reduction_report(trace: AnnealTrace) -> list[tuple[int, float]]:
    """Trace rows as (iteration, remaining fraction of the initial routes)."""
    if not trace.samples:
        raise ValueError("annealing trace holds no samples")
    return [(it, best / trace.initial) for it, best in trace.samples]
