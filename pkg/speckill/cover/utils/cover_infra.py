"""
cover_infra.py

Ball covers of a flat torus or a plane rectangle, their intersection graph,
d-regularity and the coloring into families of pairwise disjoint balls.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from speckill.errors import ColoringError, InvalidParameterError

logger = logging.getLogger(__name__)

# Relative slack when comparing distances with r_i + r_j
CONTACT_RTOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """
    Either a flat torus [0, Lx) x [0, Ly) with the periodic metric, or a plane
    rectangle [x0, x1] x [y0, y1].
    """

    kind: str
    bounds: Tuple[float, ...]

    def __post_init__(self):
        if self.kind == "torus":
            if len(self.bounds) != 2 or min(self.bounds) <= 0:
                raise InvalidParameterError(f"Torus needs two positive sides, got {self.bounds}.")
        elif self.kind == "rect":
            if len(self.bounds) != 4:
                raise InvalidParameterError(f"Rectangle needs four bounds, got {self.bounds}.")
            x0, x1, y0, y1 = self.bounds
            if not (x1 > x0 and y1 > y0):
                raise InvalidParameterError(f"Degenerate rectangle {self.bounds}.")
        else:
            raise InvalidParameterError(f"Unknown domain kind '{self.kind}'.")

    @classmethod
    def torus(cls, lx: float, ly: float) -> "Domain":
        return cls("torus", (float(lx), float(ly)))

    @classmethod
    def rect(cls, x0: float, x1: float, y0: float, y1: float) -> "Domain":
        return cls("rect", (float(x0), float(x1), float(y0), float(y1)))

    @property
    def periodic(self) -> bool:
        return self.kind == "torus"

    def displacement(self, points: np.ndarray, center: Sequence[float]) -> np.ndarray:
        """
        Returns points - center, wrapped to the nearest periodic image on the
        torus. Shape (..., 2).
        """
        disp = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
        if self.periodic:
            sides = np.asarray(self.bounds)
            disp = disp - sides * np.round(disp / sides)
        return disp

    def distance(self, p: Sequence[float], q: Sequence[float]) -> float:
        return float(np.hypot(*self.displacement(np.asarray(p), q)))

    def grid(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Uniform sample grid: n x n points i*L/n on the torus, and
        (n+1) x (n+1) points including the edges on a rectangle, so both
        nest under n -> 2n.
        """
        if n < 1:
            raise InvalidParameterError(f"Grid resolution must be >= 1, got {n}.")
        if self.periodic:
            lx, ly = self.bounds
            xs, ys = np.arange(n) * (lx / n), np.arange(n) * (ly / n)
        else:
            x0, x1, y0, y1 = self.bounds
            xs, ys = np.linspace(x0, x1, n + 1), np.linspace(y0, y1, n + 1)
        return np.meshgrid(xs, ys, indexing="ij")

    def spacing(self, n: int) -> float:
        if self.periodic:
            return max(self.bounds) / n
        x0, x1, y0, y1 = self.bounds
        return max(x1 - x0, y1 - y0) / n

    def scaled(self, factor: float) -> "Domain":
        return Domain(self.kind, tuple(v * factor for v in self.bounds))

    def to_json(self) -> Dict[str, Any]:
        return {self.kind: list(self.bounds)}


@dataclass(frozen=True)
class Ball:
    """A round disk (symplectic ball of the plane model)."""

    center: Tuple[float, float]
    radius: float
    ball_id: str = ""

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParameterError(f"Ball radius must be positive, got {self.radius}.")

    def to_json(self) -> Dict[str, Any]:
        return {"id": self.ball_id, "c": list(self.center), "r": self.radius}


@dataclass
class BallCover:
    """A finite family of balls in a domain."""

    domain: Domain
    balls: List[Ball] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.balls)

    @property
    def max_radius(self) -> float:
        return max(b.radius for b in self.balls)

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.balls], dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.balls], dtype=float)

    def closures_meet(self, i: int, j: int) -> bool:
        a, b = self.balls[i], self.balls[j]
        reach = a.radius + b.radius
        return self.domain.distance(a.center, b.center) <= reach * (1 + CONTACT_RTOL)

    def scaled(self, factor: float) -> "BallCover":
        """The cover and its domain rescaled by factor about the origin."""
        balls = [
            Ball((b.center[0] * factor, b.center[1] * factor), b.radius * factor, b.ball_id)
            for b in self.balls
        ]
        return BallCover(self.domain.scaled(factor), balls)

    def to_json(self) -> Dict[str, Any]:
        return {"domain": self.domain.to_json(), "balls": [b.to_json() for b in self.balls]}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "BallCover":
        domain_data = data.get("domain", {})
        if "torus" in domain_data:
            domain = Domain.torus(*[float(v) for v in domain_data["torus"]])
        elif "rect" in domain_data:
            domain = Domain.rect(*[float(v) for v in domain_data["rect"]])
        else:
            raise InvalidParameterError("Cover domain must be {'torus': [...]} or {'rect': [...]}.")

        balls = []
        for k, entry in enumerate(data.get("balls", [])):
            x, y = (float(v) for v in entry["c"])
            balls.append(Ball((x, y), float(entry["r"]), str(entry.get("id", f"U{k + 1}"))))
        if not balls:
            raise InvalidParameterError("A cover needs at least one ball.")
        return cls(domain, balls)

    @classmethod
    def load(cls, path: str) -> "BallCover":
        if not os.path.exists(path):
            raise FileNotFoundError(f"Cover file does not exist: {path}")
        with open(path, "r") as f:
            return cls.from_json(json.load(f))


def grid_cover(
    nx_cells: int,
    ny_cells: int,
    overlap: float = 0.2,
    side: float = 1.0,
    side_y: Optional[float] = None,
) -> BallCover:
    """
    Regular cover of the torus by one disk per grid cell, centered in the
    cell with radius (1 + overlap) times the half cell diagonal.

    Args:
        nx_cells (int): Cells along x.
        ny_cells (int): Cells along y.
        overlap (float): Relative radius excess, >= 0 for a cover.
        side (float): Torus side along x.
        side_y (Optional[float]): Torus side along y (default: side).

    Returns:
        BallCover: The cover.
    """
    if nx_cells < 1 or ny_cells < 1:
        raise InvalidParameterError("Grid covers need at least one cell per axis.")
    side_y = side if side_y is None else side_y
    hx, hy = side / nx_cells, side_y / ny_cells
    radius = (1.0 + overlap) * math.hypot(hx, hy) / 2.0

    balls = [
        Ball(((i + 0.5) * hx, (j + 0.5) * hy), radius, f"U{i}_{j}")
        for i, j in itertools.product(range(nx_cells), range(ny_cells))
    ]
    return BallCover(Domain.torus(side, side_y), balls)


def intersection_graph(cover: BallCover) -> nx.Graph:
    """
    Graph on ball indices with an edge whenever the closed balls meet
    (distance of centers <= r_i + r_j, periodic on the torus).
    """
    graph = nx.Graph()
    for k, ball in enumerate(cover.balls):
        graph.add_node(k, ball_id=ball.ball_id, radius=ball.radius)
    for i, j in itertools.combinations(range(len(cover)), 2):
        if cover.closures_meet(i, j):
            graph.add_edge(i, j)
    return graph


def d_regularity(cover: BallCover, graph: Optional[nx.Graph] = None) -> int:
    """
    Returns d, the largest number of other closed balls a closed ball meets.
    """
    graph = intersection_graph(cover) if graph is None else graph
    return max((deg for _, deg in graph.degree()), default=0)


def color_disjoint_families(
    cover: BallCover, graph: Optional[nx.Graph] = None
) -> List[List[int]]:
    """
    Splits the balls into at most d + 1 families of pairwise disjoint balls by
    greedy coloring in descending degree order.

    Returns:
        List[List[int]]: Ball indices per family, families ordered by color.

    Raises:
        ColoringError: If the coloring uses more than d + 1 colors or a family
            contains two meeting balls.
    """
    graph = intersection_graph(cover) if graph is None else graph
    d = d_regularity(cover, graph)
    coloring = nx.greedy_color(graph, strategy="largest_first")

    families: Dict[int, List[int]] = {}
    for node in sorted(coloring):
        families.setdefault(coloring[node], []).append(node)
    result = [families[color] for color in sorted(families)]

    if len(result) > d + 1:
        raise ColoringError(f"Coloring used {len(result)} families for d = {d}.")

    # Geometric recheck, independent of the graph
    for family in result:
        for i, j in itertools.combinations(family, 2):
            if cover.closures_meet(i, j):
                raise ColoringError(f"Balls {i} and {j} share a family but intersect.")

    logger.debug("Colored %s balls into %s families (d=%s)", len(cover), len(result), d)
    return result
