"""Planar geometry for clustered routing.

Coordinates are planar kilometers. This module covers Euclidean distance
matrices, capacity-balanced k-means over the customer set, cluster centroids,
and the selection of the entry/exit ("terminal") nodes of each cluster.

All functions are pure and operate on immutable inputs; the only stochastic
state is the caller-supplied RNG seed, so everything here can be called from
multiple threads concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

__all__ = [
    "Point",
    "Customer",
    "Dataset",
    "Cluster",
    "Terminals",
    "euclidean_distance",
    "build_distance_matrix",
    "centroid",
    "balanced_kmeans",
    "clustering_cost",
    "inter_cluster_matrix",
    "select_terminals",
    "load_dataset",
    "save_dataset",
]


@dataclass(frozen=True)
class Point:
    """A planar coordinate in kilometers."""

    x: float
    y: float


@dataclass(frozen=True)
class Customer:
    """A customer location with a stable positive identifier."""

    id: int
    point: Point


@dataclass(frozen=True)
class Dataset:
    """One routing instance: a depot plus an ordered list of customers.

    The customer list order defines the global indexing used everywhere
    downstream; ids must be positive and unique.
    """

    depot: Point
    customers: tuple[Customer, ...]

    def __post_init__(self) -> None:
        ids = [c.id for c in self.customers]
        if any(i <= 0 for i in ids):
            raise ValueError("customer ids must be positive integers")
        if len(set(ids)) != len(ids):
            raise ValueError("customer ids must be unique")


@dataclass(frozen=True)
class Cluster:
    """A group of customers with its arithmetic-mean centroid.

    ``members`` holds customer ids in ascending order; ``points`` is the
    coordinate of each member in the same order, so position k of either
    tuple is local node k of the cluster.
    """

    label: int
    members: tuple[int, ...]
    points: tuple[Point, ...]
    centroid: Point


@dataclass(frozen=True)
class Terminals:
    """Entry and exit customer of one cluster (never the same node)."""

    initial: int
    final: int


def euclidean_distance(p: Point, q: Point) -> float:
    """Straight-line distance between two points in kilometers."""
    return math.hypot(p.x - q.x, p.y - q.y)


def build_distance_matrix(points: Sequence[Point]) -> np.ndarray:
    """Pairwise Euclidean distance matrix over ``points``.

    Returns an n x n symmetric array with a zero diagonal. Requires at
    least two points.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points for a distance matrix")
    coords = np.array([[p.x, p.y] for p in points], dtype=float)
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    diff = coords[:, None, :] - coords[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def centroid(points: Sequence[Point]) -> Point:
    """Componentwise arithmetic mean of a non-empty list of points."""
    if not points:
        raise ValueError("centroid of an empty point list is undefined")
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return Point(sum(xs) / len(points), sum(ys) / len(points))


def _balanced_assignment(
    coords: np.ndarray, centers: np.ndarray, capacity: int
) -> np.ndarray:
    """Greedy capacity-respecting assignment of points to centers.

    All (point, center) pairs are visited in ascending distance order; a
    point takes the first center that still has room. Ties fall back to
    point index then center index, which keeps the pass deterministic.
    """
    n, k = len(coords), len(centers)
    dists = np.linalg.norm(coords[:, None, :] - centers[None, :, :], axis=2)
    order = sorted(
        ((dists[i, j], i, j) for i in range(n) for j in range(k))
    )
    assignment = np.full(n, -1, dtype=int)
    room = [capacity] * k
    placed = 0
    for _, i, j in order:
        if assignment[i] >= 0 or room[j] == 0:
            continue
        assignment[i] = j
        room[j] -= 1
        placed += 1
        if placed == n:
            break
    return assignment


def balanced_kmeans(
    dataset: Dataset,
    k: int,
    capacity: int,
    seed: "int | np.random.SeedSequence | None" = None,
    max_iterations: int = 100,
) -> list[Cluster]:
    """Partition the customers into ``k`` clusters of exactly ``capacity``.

    Plain k-means does not guarantee equal-size clusters, so each iteration
    uses a greedy balanced assignment (points claim centers in ascending
    distance order, skipping full clusters) followed by the usual centroid
    update, until the assignment stabilizes or ``max_iterations`` pass.

    Cluster labels are canonicalized by ascending smallest member id and
    members are listed in ascending id order, so the output is independent
    of the random initialization once the same partition is reached.
    Fixed seed implies bit-identical output.
    """
    customers = dataset.customers
    if k * capacity != len(customers):
        raise ValueError(
            f"k * capacity must equal the customer count "
            f"({k} * {capacity} != {len(customers)})"
        )
    coords = np.array([[c.point.x, c.point.y] for c in customers], dtype=float)
    rng = np.random.default_rng(seed)
    centers = coords[rng.choice(len(customers), size=k, replace=False)]

    assignment: np.ndarray | None = None
    for _ in range(max_iterations):
        new_assignment = _balanced_assignment(coords, centers, capacity)
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        centers = np.array(
            [coords[assignment == j].mean(axis=0) for j in range(k)]
        )
    assert assignment is not None

    groups: list[list[Customer]] = [[] for _ in range(k)]
    for cust, j in zip(customers, assignment):
        groups[int(j)].append(cust)
    for group in groups:
        group.sort(key=lambda c: c.id)
    groups.sort(key=lambda g: g[0].id)

    clusters = []
    for label, group in enumerate(groups, start=1):
        pts = tuple(c.point for c in group)
        clusters.append(
            Cluster(
                label=label,
                members=tuple(c.id for c in group),
                points=pts,
                centroid=centroid(pts),
            )
        )
    return clusters


def clustering_cost(clusters: Iterable[Cluster]) -> float:
    """Sum of squared member-to-centroid distances over all clusters."""
    total = 0.0
    for cluster in clusters:
        for p in cluster.points:
            total += euclidean_distance(p, cluster.centroid) ** 2
    return total


def inter_cluster_matrix(depot: Point, centroids: Sequence[Point]) -> np.ndarray:
    """Distance matrix over ``[depot, centroid_1, ..., centroid_k]``."""
    return build_distance_matrix([depot, *centroids])


def select_terminals(
    cluster: Cluster, depot: Point, other_centroids: Sequence[Point]
) -> Terminals:
    """Pick the entry and exit nodes of a cluster.

    Each member is scored by its distance to the depot plus the sum of its
    distances to the other clusters' centroids. The lowest score becomes the
    initial node and the second lowest the final node, so that both sit on
    the side of the cluster facing the rest of the instance. Ties break
    toward the smaller customer id.
    """
    if len(cluster.members) < 2:
        raise ValueError("terminal selection needs a cluster of at least 2 nodes")
    scored = []
    for cid, p in zip(cluster.members, cluster.points):
        score = euclidean_distance(p, depot)
        score += sum(euclidean_distance(p, c) for c in other_centroids)
        scored.append((score, cid))
    scored.sort()
    return Terminals(initial=scored[0][1], final=scored[1][1])


def load_dataset(path: "str | Path") -> Dataset:
    """Read a dataset file.

    The file is a YAML document with a ``depot: [x, y]`` entry and a
    ``customers`` list of ``{id, x, y}`` mappings, coordinates in decimal
    kilometers.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "depot" not in raw or "customers" not in raw:
        raise ValueError(f"{path}: expected 'depot' and 'customers' entries")
    dx, dy = raw["depot"]
    customers = []
    for entry in raw["customers"]:
        try:
            customers.append(
                Customer(int(entry["id"]), Point(float(entry["x"]), float(entry["y"])))
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: bad customer entry {entry!r}") from exc
    dataset = Dataset(Point(float(dx), float(dy)), tuple(customers))
    coords = [dataset.depot.x, dataset.depot.y]
    for c in dataset.customers:
        coords.extend((c.point.x, c.point.y))
    if not all(math.isfinite(v) for v in coords):
        raise ValueError(f"{path}: coordinates must be finite")
    return dataset


def save_dataset(dataset: Dataset, path: "str | Path") -> None:
    """Write a dataset file in the format read by :func:`load_dataset`."""
    doc = {
        "depot": [dataset.depot.x, dataset.depot.y],
        "customers": [
            {"id": c.id, "x": c.point.x, "y": c.point.y} for c in dataset.customers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
