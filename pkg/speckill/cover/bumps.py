"""
bumps.py

Radial cutoff functions used to build partitions of unity. Each bump is a
function of u = |z - c|^2 / r^2, positive for u < 1 and identically zero for
u >= 1, given together with its derivative in u so gradients stay analytic.

You can add another cutoff by defining a Bump instance below; it is picked up
by BUMPS automatically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from speckill.errors import InvalidParameterError

BumpFn = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Bump:
    """
    A cutoff phi(u) with derivative dphi/du.

    Attributes:
        name (str): Registry key.
        smoothness (str): C^k class, for reports.
        profile (BumpFn): Maps u to (phi(u), dphi/du(u)).
    """

    name: str
    smoothness: str
    profile: BumpFn

    def __call__(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.profile(np.asarray(u, dtype=float))


def _polynomial(u: np.ndarray):
    inside = u < 1.0
    w = np.where(inside, 1.0 - u, 0.0)
    return w**3, -3.0 * w**2


def _exponential(u: np.ndarray):
    inside = u < 1.0
    w = np.where(inside, 1.0 - u, 1.0)
    phi = np.where(inside, np.exp(-1.0 / w), 0.0)
    return phi, np.where(inside, -phi / w**2, 0.0)


# ================ Bumps ================

# (1 - t^2)^3 for t < 1: C^2 with polynomial derivatives
POLYNOMIAL = Bump(name="polynomial", smoothness="C2", profile=_polynomial)

# exp(-1 / (1 - t^2)) for t < 1: smooth, but flat near the boundary
EXPONENTIAL = Bump(name="exponential", smoothness="Cinf", profile=_exponential)


BUMPS = {item.name: item for item in list(globals().values()) if isinstance(item, Bump)}


def get_bump(name: str) -> Bump:
    if name not in BUMPS:
        raise InvalidParameterError(
            f"Unknown cutoff '{name}'. Known cutoffs: {', '.join(sorted(BUMPS))}."
        )
    return BUMPS[name]
