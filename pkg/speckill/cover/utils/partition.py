"""
partition.py

Partitions of unity built from radial bumps on a ball cover, sampled on a
uniform grid, with analytic first derivatives and the Poisson bracket matrix
B_ij = {f_i, f_j}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from speckill.cover.bumps import Bump, get_bump
from speckill.cover.utils.cover_infra import BallCover
from speckill.errors import InvalidParameterError, NotACoverError

logger = logging.getLogger(__name__)

DEFAULT_GRID = 512
DEFAULT_CUTOFF = "polynomial"

# Grid points are processed in blocks of this many
CHUNK_POINTS = 65536

SUPPORT_RTOL = 1e-12


def _bump_sums(
    cover: BallCover, bump: Bump, support_factor: float, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluates every bump phi_i and its gradient at the points.

    Returns:
        Tuple of arrays of shape (L, P): phi, d(phi)/dx, d(phi)/dy.
    """
    size = (len(cover), points.shape[0])
    phi, gx, gy = np.empty(size), np.empty(size), np.empty(size)

    for k, ball in enumerate(cover.balls):
        reach = ball.radius * support_factor
        disp = cover.domain.displacement(points, ball.center)
        u = np.einsum("pi,pi->p", disp, disp) / reach**2
        value, slope = bump(u)
        scale = 2.0 * slope / reach**2
        phi[k] = value
        gx[k] = scale * disp[:, 0]
        gy[k] = scale * disp[:, 1]
    return phi, gx, gy


def evaluate_members(
    cover: BallCover, bump: Bump, support_factor: float, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluates f_i = phi_i / sum_j phi_j and its partials by the quotient rule.

    Args:
        cover (BallCover): The cover.
        bump (Bump): Cutoff used for every ball.
        support_factor (float): Bump radius as a multiple of the ball radius.
        points (np.ndarray): Points of shape (P, 2).

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: f, df/dx, df/dy, each (L, P).

    Raises:
        NotACoverError: If some point lies outside every bump support.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi, gx, gy = _bump_sums(cover, bump, support_factor, points)
    total = phi.sum(axis=0)

    gaps = np.flatnonzero(total <= 0.0)
    if gaps.size:
        raise NotACoverError(points[gaps[0]])

    tx, ty = gx.sum(axis=0), gy.sum(axis=0)
    f = phi / total
    fx = (gx * total - phi * tx) / total**2
    fy = (gy * total - phi * ty) / total**2
    return f, fx, fy


@dataclass
class PartitionOfUnity:
    """
    A partition of unity sampled on the grid of its domain.

    Attributes:
        cover (BallCover): The cover the members are built from.
        bump (Bump): The cutoff.
        resolution (int): Grid resolution n.
        support_factor (float): Bump radius over ball radius.
        points (np.ndarray): Grid points, shape (G, 2), row-major over (i, j).
        f (np.ndarray): Members at the grid points, shape (L, G).
        fx (np.ndarray): d f_i / dx at the grid points.
        fy (np.ndarray): d f_i / dy at the grid points.
        subordinate (bool): Whether supp(f_i) lies in the closed ball i.
        sum_error (float): max |sum_i f_i - 1| on the grid.
    """

    cover: BallCover
    bump: Bump
    resolution: int
    support_factor: float
    points: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    fx: np.ndarray = field(repr=False)
    fy: np.ndarray = field(repr=False)
    subordinate: bool = True
    sum_error: float = 0.0

    @property
    def num_members(self) -> int:
        return len(self.cover)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        side = self.resolution if self.cover.domain.periodic else self.resolution + 1
        return side, side

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluates the members and their partials off the grid."""
        return evaluate_members(self.cover, self.bump, self.support_factor, points)

    def to_json(self) -> Dict[str, Any]:
        return {
            "cutoff": self.bump.name,
            "members": self.num_members,
            "grid": self.resolution,
            "support_factor": self.support_factor,
            "subordinate": self.subordinate,
            "sum_error": self.sum_error,
        }


def _subordinate(cover: BallCover, points: np.ndarray, f: np.ndarray) -> bool:
    for k, ball in enumerate(cover.balls):
        disp = cover.domain.displacement(points, ball.center)
        dist = np.hypot(disp[:, 0], disp[:, 1])
        outside = dist > ball.radius * (1 + SUPPORT_RTOL)
        if np.any(f[k][outside] > 0.0):
            return False
    return True


def build_partition(
    cover: BallCover,
    cutoff: str = DEFAULT_CUTOFF,
    grid: int = DEFAULT_GRID,
    support_factor: float = 1.0,
) -> PartitionOfUnity:
    """
    Builds f_i = phi_i / sum_j phi_j from one bump per ball and samples it on
    the uniform grid of the domain.

    Args:
        cover (BallCover): The cover.
        cutoff (str): Bump name, see speckill.cover.bumps.
        grid (int): Grid resolution n.
        support_factor (float): Bump radius as a multiple of the ball radius.
            Values above 1 give a partition that is not subordinate to the
            cover.

    Returns:
        PartitionOfUnity: The sampled partition.

    Raises:
        NotACoverError: If a grid point is not covered, with that point as
            witness (lowest grid index first).
    """
    if not support_factor > 0:
        raise InvalidParameterError(f"support_factor must be positive, got {support_factor}.")
    bump = get_bump(cutoff)
    xs, ys = cover.domain.grid(grid)
    points = np.column_stack([xs.ravel(), ys.ravel()])

    count = points.shape[0]
    f = np.empty((len(cover), count))
    fx, fy = np.empty_like(f), np.empty_like(f)
    for start in range(0, count, CHUNK_POINTS):
        block = slice(start, start + CHUNK_POINTS)
        f[:, block], fx[:, block], fy[:, block] = evaluate_members(
            cover, bump, support_factor, points[block]
        )

    sum_error = float(np.max(np.abs(f.sum(axis=0) - 1.0)))
    subordinate = _subordinate(cover, points, f)
    if not subordinate:
        logger.warning(
            "Partition is not subordinate to the cover (support_factor=%s)", support_factor
        )

    logger.debug(
        "Built %s partition: %s members on %s points, sum error %.3g",
        bump.name,
        len(cover),
        count,
        sum_error,
    )
    return PartitionOfUnity(
        cover=cover,
        bump=bump,
        resolution=grid,
        support_factor=support_factor,
        points=points,
        f=f,
        fx=fx,
        fy=fy,
        subordinate=subordinate,
        sum_error=sum_error,
    )


def bracket_matrix_from_gradients(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """B = a b^T - b a^T for a = grad_x f, b = grad_y f at one point."""
    return np.outer(a, b) - np.outer(b, a)


def poisson_bracket_matrix(pou: PartitionOfUnity, z: Sequence[float]) -> np.ndarray:
    """
    Returns the L x L matrix B_ij = {f_i, f_j}(z) = f_i,x f_j,y - f_i,y f_j,x.
    """
    _, fx, fy = pou.evaluate(np.asarray(z, dtype=float).reshape(1, 2))
    return bracket_matrix_from_gradients(fx[:, 0], fy[:, 0])


def combined_bracket(
    pou: PartitionOfUnity, x: Sequence[float], y: Sequence[float], z: Sequence[float]
) -> float:
    """
    Evaluates {sum_i x_i f_i, sum_i y_i f_i}(z) directly from the gradients
    of the two combinations.
    """
    _, fx, fy = pou.evaluate(np.asarray(z, dtype=float).reshape(1, 2))
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float((x @ fx[:, 0]) * (y @ fy[:, 0]) - (x @ fy[:, 0]) * (y @ fx[:, 0]))
