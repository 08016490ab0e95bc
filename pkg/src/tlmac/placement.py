"""Assign each (cluster, weight group) pair to a LUT array slot.

The placement grid has one column per cluster (the select index) and one row
per LUT array. Hardware rules: an array stores at most one group per select
index, and all groups a step needs must sit in distinct arrays because arrays
are read mutually exclusively at a shared select value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterPlan
from .errors import PlacementError
from .qweights import GroupedWeights

VACANT = -1


@dataclass
class PlacementPlan:
    """Occupancy grid, (cluster, group) -> array lookup, and routing matrix.

    ``routing[e, c, p]`` is True when the group stored at array e, select c
    feeds output p during some step of cluster c. ``group_table`` carries the
    group values so downstream truth-table generation needs no other input.
    """

    occupancy: np.ndarray
    location: dict[tuple[int, int], int]
    routing: np.ndarray
    group_table: np.ndarray

    @property
    def n_arrays(self) -> int:
        return self.occupancy.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.occupancy.shape[1]

    @property
    def n_parallel(self) -> int:
        return self.routing.shape[2]

    def copy(self) -> "PlacementPlan":
        return PlacementPlan(
            occupancy=self.occupancy.copy(),
            location=dict(self.location),
            routing=self.routing.copy(),
            group_table=self.group_table,
        )


def derive_routing(occupancy: np.ndarray, plan: ClusterPlan,
                   grouped: GroupedWeights) -> np.ndarray:
    """Rebuild the routing matrix implied by an occupancy grid."""
    n_arrays, n_clusters = occupancy.shape
    routing = np.zeros((n_arrays, n_clusters, grouped.n_parallel), dtype=bool)
    lookup = np.full((n_clusters, grouped.n_unique), VACANT, dtype=np.int64)
    for (c, u), e in _locations_of(occupancy).items():
        lookup[c, u] = e
    cols = np.arange(grouped.n_parallel)
    for t in range(grouped.n_steps):
        c = int(plan.labels[t])
        arrays = lookup[c, grouped.group_index[t]]
        if (arrays == VACANT).any():
            missing = int(grouped.group_index[t][arrays == VACANT][0])
            raise PlacementError(
                f"step {t}: group {missing} has no slot in cluster {c}"
            )
        routing[arrays, c, cols] = True
    return routing


def _locations_of(occupancy: np.ndarray) -> dict[tuple[int, int], int]:
    locations = {}
    rows, cols = np.nonzero(occupancy != VACANT)
    for e, c in zip(rows, cols):
        locations[(int(c), int(occupancy[e, c]))] = int(e)
    return locations


def place_groups(plan: ClusterPlan, grouped: GroupedWeights, seed: int = 0) -> PlacementPlan:
    """Random initial placement: each cluster member gets a distinct array row."""
    n_arrays = plan.n_arrays
    rng = np.random.default_rng(seed)
    occupancy = np.full((n_arrays, plan.n_clusters), VACANT, dtype=np.int64)
    location: dict[tuple[int, int], int] = {}
    for c in range(plan.n_clusters):
        members = plan.members[c]
        if len(members) > n_arrays:
            raise PlacementError(
                f"cluster {c} holds {len(members)} groups but only "
                f"{n_arrays} arrays exist"
            )
        rows = rng.choice(n_arrays, size=len(members), replace=False)
        for u, e in zip(members, rows):
            occupancy[e, c] = u
            location[(c, int(u))] = int(e)
    routing = derive_routing(occupancy, plan, grouped)
    return PlacementPlan(
        occupancy=occupancy,
        location=location,
        routing=routing,
        group_table=grouped.group_table.copy(),
    )


def validate_placement(placement: PlacementPlan, plan: ClusterPlan,
                       grouped: GroupedWeights) -> None:
    """Check the hardware rules directly against the occupancy grid.

    Raises PlacementError on the first violation. Covers: slot capacity (the
    grid shape itself), one distinct array per group within a cluster, every
    step's groups retrievable at its select index, and routing consistency.
    """
    occupancy = placement.occupancy
    for c in range(placement.n_clusters):
        col = occupancy[:, c]
        used = col[col != VACANT]
        if len(np.unique(used)) != len(used):
            raise PlacementError(f"cluster {c}: a group occupies two arrays")
        expected = set(int(u) for u in plan.members[c])
        if set(int(u) for u in used) != expected:
            raise PlacementError(f"cluster {c}: placed groups differ from members")
    for (c, u), e in placement.location.items():
        if occupancy[e, c] != u:
            raise PlacementError(f"location map disagrees with occupancy at ({c}, {u})")
    for t in range(grouped.n_steps):
        c = int(plan.labels[t])
        step_groups = np.unique(grouped.group_index[t])
        seen_arrays = set()
        for u in step_groups:
            e = placement.location.get((c, int(u)))
            if e is None:
                raise PlacementError(f"step {t}: group {int(u)} missing from cluster {c}")
            seen_arrays.add(e)
        if len(seen_arrays) != len(step_groups):
            raise PlacementError(f"step {t}: two groups share one array")
    rebuilt = derive_routing(occupancy, plan, grouped)
    if not np.array_equal(rebuilt, placement.routing):
        raise PlacementError("routing matrix disagrees with occupancy")
