"""
nu.py

The magnitude of Poisson non-commutativity nu_c of a sampled partition of
unity, the infinity-to-one norm it reduces to at each grid point, and the
comparison of nu_c against the lower bound 1/(2 d^2 pi r^2) for d-regular
covers.

At a point z the bracket matrix has rank two, B = a b^T - b a^T with
a = grad_x f and b = grad_y f. For fixed x the best y gives
sum_j |u1 b_j - u2 a_j| with u = (x.a, x.b), a convex function of u, so
the maximum sits at a vertex of the zonotope {(x.a, x.b) : x in [-1, 1]^L}.
Those L + 1 vertices (up to sign) come from sorting the generators by angle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from speckill.calculus.derivations import pb_lower_bound
from speckill.cover.utils.cover_infra import BallCover, d_regularity
from speckill.cover.utils.partition import (
    DEFAULT_CUTOFF,
    PartitionOfUnity,
    bracket_matrix_from_gradients,
    build_partition,
)
from speckill.errors import InvalidParameterError

logger = logging.getLogger(__name__)

DEFAULT_EXACT_CAP = 16
DEFAULT_GRID_SLACK = 0.02
DEFAULT_RESTARTS = 64
MAX_SWEEPS = 100

# Grid points per vectorized block of the vertex search
CHUNK_POINTS = 8192

METHODS = ("rank_two", "enumerate")


def _signs(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, 1, -1).astype(int)


def sign_vectors(length: int, fix_first: bool = False) -> np.ndarray:
    """
    All vectors in {+1, -1}^length as rows in lexicographic order (+1 before
    -1). With fix_first, only those with first entry +1.
    """
    free = length - 1 if fix_first else length
    idx = np.arange(2**free)
    bits = (idx[:, None] >> np.arange(free - 1, -1, -1)) & 1
    rows = 1 - 2 * bits
    if fix_first:
        rows = np.column_stack([np.ones(len(idx), dtype=int), rows])
    return rows.astype(int)


@dataclass
class NormResult:
    """value = x^T B y at the returned sign vectors."""

    value: float
    x: np.ndarray
    y: np.ndarray
    exact: bool


def _alternating_ascent(B: np.ndarray, seed: int, restarts: int) -> NormResult:
    rng = np.random.default_rng(seed)
    size = B.shape[0]
    best: Optional[NormResult] = None

    for _ in range(restarts):
        x = rng.choice([-1, 1], size=size)
        y = _signs(B.T @ x)
        value = float(x @ B @ y)
        for _ in range(MAX_SWEEPS):
            x_new = _signs(B @ y)
            y_new = _signs(B.T @ x_new)
            new_value = float(x_new @ B @ y_new)
            if new_value <= value:
                break
            x, y, value = x_new, y_new, new_value
        if best is None or value > best.value:
            best = NormResult(value, x, y, exact=False)
    return best


def norm_inf_one(
    B: np.ndarray,
    exact_cap: int = DEFAULT_EXACT_CAP,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> NormResult:
    """
    Computes max x^T B y over x, y in {+1, -1}^L.

    Up to exact_cap rows every x with x_1 = +1 is enumerated (x and -x give
    the same value) and paired with its best response y = sign(B^T x).
    Larger matrices fall back to multi-start alternating sign ascent and are
    flagged non-exact.

    Args:
        B (np.ndarray): The L x L matrix.
        exact_cap (int): Largest L solved exactly.
        seed (int): Seed for the heuristic starts.
        restarts (int): Number of heuristic starts.

    Returns:
        NormResult: Value and witnesses.
    """
    B = np.asarray(B, dtype=float)
    size = B.shape[0]
    if size == 0:
        empty = np.zeros(0, dtype=int)
        return NormResult(0.0, empty, empty, exact=True)

    if size > exact_cap:
        logger.debug("L=%s exceeds exact cap %s; using alternating ascent", size, exact_cap)
        return _alternating_ascent(B, seed, restarts)

    xs = sign_vectors(size, fix_first=True)
    responses = xs @ B
    values = np.abs(responses).sum(axis=1)
    best = int(np.argmax(values))
    x, y = xs[best], _signs(responses[best])
    return NormResult(float(x @ B @ y), x, y, exact=True)


def brute_force_norm(B: np.ndarray, block: int = 512) -> float:
    """
    Maximum of x^T B y over all 4^L pairs of sign vectors.
    """
    B = np.asarray(B, dtype=float)
    if B.shape[0] == 0:
        return 0.0
    xs = sign_vectors(B.shape[0]).astype(float)
    right = B @ xs.T
    best = -np.inf
    for start in range(0, xs.shape[0], block):
        best = max(best, float((xs[start : start + block] @ right).max()))
    return best


def _vertex_search(
    a: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorized zonotope vertex search for B = a b^T - b a^T at P points.

    Args:
        a (np.ndarray): Shape (L, P).
        b (np.ndarray): Shape (L, P).

    Returns:
        Tuple: values (P,), best vertex index (P,), generator order (L, P)
        and generator orientation (L, P).
    """
    flip = (b < 0) | ((b == 0) & (a < 0))
    orient = np.where(flip, -1.0, 1.0)
    ga, gb = orient * a, orient * b
    order = np.argsort(np.arctan2(gb, ga), axis=0, kind="stable")
    sa = np.take_along_axis(ga, order, axis=0)
    sb = np.take_along_axis(gb, order, axis=0)

    zeros = np.zeros((1, a.shape[1]))
    ca = np.concatenate([zeros, np.cumsum(sa, axis=0)])
    cb = np.concatenate([zeros, np.cumsum(sb, axis=0)])
    ux, uy = 2.0 * ca - ca[-1], 2.0 * cb - cb[-1]

    objective = np.abs(ux[:, None, :] * b[None, :, :] - uy[:, None, :] * a[None, :, :]).sum(axis=1)
    best = np.argmax(objective, axis=0)
    values = objective[best, np.arange(a.shape[1])]
    return values, best, order, orient


def rank_two_norm(a: Sequence[float], b: Sequence[float]) -> NormResult:
    """
    Exact infinity-to-one norm of a b^T - b a^T for any L.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 1)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    size = a.shape[0]
    if size == 0:
        empty = np.zeros(0, dtype=int)
        return NormResult(0.0, empty, empty, exact=True)

    _, best, order, orient = _vertex_search(a, b)
    k = int(best[0])
    sigma = np.full(size, -1)
    sigma[order[:k, 0]] = 1
    x = (sigma * orient[:, 0]).astype(int)

    B = bracket_matrix_from_gradients(a[:, 0], b[:, 0])
    y = _signs(B.T @ x)
    return NormResult(float(x @ B @ y), x, y, exact=True)


@dataclass
class NuReport:
    """
    nu_c on the grid with the maximizing point and sign vectors.

    Attributes:
        nu_c (float): x^T B(z*) y at the witnesses.
        argmax (Tuple[float, float]): The maximizing grid point z*.
        grid_index (int): Row-major index of z* (lowest index on ties).
        x (List[int]): Sign vector x.
        y (List[int]): Sign vector y.
        resolution (int): Grid resolution n.
        exact (bool): False if any per-point norm came from the heuristic.
        method (str): "rank_two" or "enumerate".
        per_point (np.ndarray): Per-grid-point norms, shape (G,).
    """

    nu_c: float
    argmax: Tuple[float, float]
    grid_index: int
    x: List[int]
    y: List[int]
    resolution: int
    exact: bool
    method: str
    per_point: np.ndarray = field(repr=False)

    def to_json(self) -> Dict[str, Any]:
        return {
            "nu_c": self.nu_c,
            "argmax": list(self.argmax),
            "grid_index": self.grid_index,
            "x": self.x,
            "y": self.y,
            "grid": self.resolution,
            "exact": self.exact,
            "method": self.method,
        }


def nu_c(
    pou: PartitionOfUnity,
    method: str = "rank_two",
    exact_cap: int = DEFAULT_EXACT_CAP,
    seed: int = 0,
) -> NuReport:
    """
    Computes nu_c(f) as the largest per-point infinity-to-one norm of the
    bracket matrix over the grid.

    Args:
        pou (PartitionOfUnity): The sampled partition.
        method (str): "rank_two" uses the exact vertex search at every point;
            "enumerate" calls norm_inf_one at every point (slow, for small
            grids and cross-checks).
        exact_cap (int): Passed to norm_inf_one.
        seed (int): Passed to norm_inf_one.

    Returns:
        NuReport: The report.
    """
    if method not in METHODS:
        raise InvalidParameterError(
            f"Unknown method '{method}'. Known methods: {', '.join(METHODS)}."
        )

    count = pou.points.shape[0]
    per_point = np.empty(count)
    exact = True
    if method == "rank_two":
        for start in range(0, count, CHUNK_POINTS):
            block = slice(start, start + CHUNK_POINTS)
            per_point[block] = _vertex_search(pou.fx[:, block], pou.fy[:, block])[0]
    else:
        for k in range(count):
            B = bracket_matrix_from_gradients(pou.fx[:, k], pou.fy[:, k])
            result = norm_inf_one(B, exact_cap=exact_cap, seed=seed)
            per_point[k] = result.value
            exact = exact and result.exact

    idx = int(np.argmax(per_point))
    a, b = pou.fx[:, idx], pou.fy[:, idx]
    witness = rank_two_norm(a, b)
    if pou.num_members <= exact_cap:
        check = norm_inf_one(bracket_matrix_from_gradients(a, b), exact_cap=exact_cap, seed=seed)
        if check.value > witness.value:
            witness = check

    point = pou.points[idx]
    logger.info(
        "nu_c = %.12g at (%.6g, %.6g) on a %s grid",
        witness.value,
        point[0],
        point[1],
        pou.resolution,
    )
    return NuReport(
        nu_c=witness.value,
        argmax=(float(point[0]), float(point[1])),
        grid_index=idx,
        x=[int(v) for v in witness.x],
        y=[int(v) for v in witness.y],
        resolution=pou.resolution,
        exact=exact,
        method=method,
        per_point=per_point,
    )


class BoundStatus(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass
class LowerBoundReport:
    """
    Comparison of nu_c against 1/(2 d^2 pi r^2).
    """

    status: BoundStatus
    d: int
    r: float
    bound: Optional[float]
    bound_expr: str
    nu_c: float
    grid_slack: float
    subordinate: bool
    energy_asserted: bool
    reason: str
    nu: NuReport

    @property
    def ok(self) -> bool:
        return self.status is not BoundStatus.FAIL

    def to_json(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "d": self.d,
            "r": self.r,
            "bound": self.bound,
            "bound_expr": self.bound_expr,
            "nu_c": self.nu_c,
            "grid_slack": self.grid_slack,
            "subordinate": self.subordinate,
            "energy_asserted": self.energy_asserted,
            "reason": self.reason,
            "nu": self.nu.to_json(),
        }


def check_lower_bound(
    pou: PartitionOfUnity,
    nu: Optional[NuReport] = None,
    energy_asserted: bool = False,
    grid_slack: float = DEFAULT_GRID_SLACK,
) -> LowerBoundReport:
    """
    Checks nu_c >= bound * (1 - grid_slack) with bound = 1/(2 d^2 pi r^2) from
    the bound calculus, r the largest radius. Skips the claim when the
    partition is not subordinate or the cover has d = 0.

    Args:
        pou (PartitionOfUnity): The partition.
        nu (Optional[NuReport]): Precomputed nu_c report.
        energy_asserted (bool): User assertion that E(U) < |lambda|/2; it is
            recorded, not verified.
        grid_slack (float): Relative allowance for grid sampling.

    Returns:
        LowerBoundReport: The report.
    """
    cover = pou.cover
    nu = nu_c(pou) if nu is None else nu
    d = d_regularity(cover)
    r = cover.max_radius

    bound, bound_expr, reason = None, "", ""
    if d >= 1:
        expr, _ = pb_lower_bound(d, r)
        bound, bound_expr = float(expr), str(expr)

    if not pou.subordinate:
        status, reason = BoundStatus.SKIPPED, "partition is not subordinate to the cover"
    elif bound is None:
        status, reason = BoundStatus.SKIPPED, "cover has d = 0; the bound needs d >= 1"
    elif nu.nu_c >= bound * (1.0 - grid_slack):
        status = BoundStatus.PASS
    else:
        status, reason = BoundStatus.FAIL, "nu_c below the lower bound"

    logger.info("Lower bound check %s: nu_c=%.12g, bound=%s, d=%s", status.value, nu.nu_c, bound, d)
    return LowerBoundReport(
        status=status,
        d=d,
        r=r,
        bound=bound,
        bound_expr=bound_expr,
        nu_c=nu.nu_c,
        grid_slack=grid_slack,
        subordinate=pou.subordinate,
        energy_asserted=energy_asserted,
        reason=reason,
        nu=nu,
    )


@dataclass
class ScalingReport:
    """nu_c against the ball radius, with the fitted log-log slope."""

    radii: List[float]
    nus: List[float]
    slope: float

    def to_json(self) -> Dict[str, Any]:
        return {"radii": self.radii, "nu_c": self.nus, "slope": self.slope}


def scaling_study(
    cover: BallCover,
    factors: Sequence[float] = (1.0, 0.5, 0.25),
    cutoff: str = DEFAULT_CUTOFF,
    grid: int = 128,
) -> ScalingReport:
    """
    Rescales the domain together with the cover by each factor, keeping the
    grid resolution, and fits log nu_c against log r. Gradients scale like
    1/r, so the slope is -2.
    """
    radii, nus = [], []
    for factor in factors:
        scaled = cover.scaled(factor)
        report = nu_c(build_partition(scaled, cutoff=cutoff, grid=grid))
        radii.append(scaled.max_radius)
        nus.append(report.nu_c)

    slope = float(np.polyfit(np.log(radii), np.log(nus), 1)[0])
    logger.info("Scaling slope of nu_c against r: %.4f", slope)
    return ScalingReport(radii=radii, nus=nus, slope=slope)


def refinement_study(
    cover: BallCover,
    resolutions: Sequence[int] = (64, 128, 256),
    cutoff: str = DEFAULT_CUTOFF,
) -> List[Tuple[int, float]]:
    """
    nu_c of one partition sampled at several grid resolutions. On the torus
    a resolution that doubles another samples a superset of its points.
    """
    return [(n, nu_c(build_partition(cover, cutoff=cutoff, grid=n)).nu_c) for n in resolutions]