"""Unit tests for nu_c and the Poisson bracket lower bound."""
from __future__ import annotations

import math

import numpy as np
import pytest

from speckill.cover.utils.cover_infra import Ball, BallCover, Domain
from speckill.cover.utils.nu import (
    BoundStatus,
    brute_force_norm,
    check_lower_bound,
    norm_inf_one,
    nu_c,
    rank_two_norm,
    refinement_study,
    scaling_study,
    sign_vectors,
)
from speckill.cover.utils.partition import bracket_matrix_from_gradients, build_partition
from speckill.errors import InvalidParameterError


def random_antisymmetric(rng, size):
    upper = np.triu(rng.normal(size=(size, size)), k=1)
    return upper - upper.T


class TestSignVectors:
    """Tests for sign_vectors."""

    def test_lexicographic(self):
        """+1 comes before -1 in every position."""
        assert sign_vectors(2).tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]

    def test_fix_first(self):
        """Half the vectors, all starting with +1."""
        rows = sign_vectors(4, fix_first=True)
        assert rows.shape == (8, 4)
        assert np.all(rows[:, 0] == 1)


class TestNormInfOne:
    """Tests for the infinity-to-one norm solvers."""

    def test_matches_brute_force(self):
        """Exact enumeration agrees with the 4^L search for L = 2..12."""
        rng = np.random.default_rng(0)
        for trial in range(100):
            size = 2 + trial % 11
            B = random_antisymmetric(rng, size)
            result = norm_inf_one(B)
            assert result.exact
            assert result.value == pytest.approx(brute_force_norm(B), rel=1e-12)
            assert float(result.x @ B @ result.y) == pytest.approx(result.value, rel=1e-12)

    @pytest.mark.parametrize("b", [0.7, -2.5])
    def test_two_by_two(self, b):
        """[[0, b], [-b, 0]] has norm 2|b|."""
        B = np.array([[0.0, b], [-b, 0.0]])
        assert norm_inf_one(B).value == pytest.approx(2 * abs(b))
        assert brute_force_norm(B) == pytest.approx(2 * abs(b))

    def test_zero_matrix(self):
        """The zero matrix has norm zero."""
        assert norm_inf_one(np.zeros((5, 5))).value == 0.0

    def test_heuristic_is_flagged(self):
        """Beyond the cap the result is a lower bound marked non-exact."""
        rng = np.random.default_rng(1)
        B = random_antisymmetric(rng, 8)
        result = norm_inf_one(B, exact_cap=4, seed=3)
        assert not result.exact
        assert result.value <= brute_force_norm(B) + 1e-12
        assert float(result.x @ B @ result.y) == pytest.approx(result.value)

    def test_rank_two_is_exact(self):
        """The zonotope vertex search matches brute force on rank-two brackets."""
        rng = np.random.default_rng(2)
        for size in range(1, 11):
            for _ in range(5):
                a, b = rng.normal(size=size), rng.normal(size=size)
                B = bracket_matrix_from_gradients(a, b)
                result = rank_two_norm(a, b)
                assert result.value == pytest.approx(brute_force_norm(B), rel=1e-12, abs=1e-12)
                assert float(result.x @ B @ result.y) == pytest.approx(result.value)

    def test_rank_two_degenerate_gradients(self):
        """Zero and parallel gradients give a zero bracket."""
        a = np.array([1.0, 0.0, -2.0])
        assert rank_two_norm(a, 3 * a).value == pytest.approx(0.0, abs=1e-12)
        assert rank_two_norm(np.zeros(3), np.zeros(3)).value == 0.0


class TestNuC:
    """Tests for nu_c on sampled partitions."""

    def test_single_ball(self):
        """A constant partition has nu_c = 0."""
        cover = BallCover(Domain.torus(1, 1), [Ball((0.5, 0.5), 0.8)])
        report = nu_c(build_partition(cover, grid=32))
        assert report.nu_c == 0.0
        assert report.grid_index == 0

    def test_methods_agree(self, torus_grid_cover):
        """Per-point enumeration and the vertex search coincide."""
        pou = build_partition(torus_grid_cover, grid=8)
        fast = nu_c(pou, method="rank_two")
        slow = nu_c(pou, method="enumerate")
        np.testing.assert_allclose(fast.per_point, slow.per_point, rtol=1e-10, atol=1e-12)
        assert fast.nu_c == pytest.approx(slow.nu_c)
        assert slow.exact

    def test_witness(self, torus_grid_cover):
        """nu_c is x^T B y at the reported point and sign vectors."""
        pou = build_partition(torus_grid_cover, grid=32)
        report = nu_c(pou)
        k = report.grid_index
        B = bracket_matrix_from_gradients(pou.fx[:, k], pou.fy[:, k])
        assert float(np.array(report.x) @ B @ np.array(report.y)) == pytest.approx(report.nu_c)
        assert report.nu_c == pytest.approx(report.per_point.max())
        assert report.argmax == tuple(pou.points[k])

    def test_unknown_method(self, torus_grid_cover):
        """Only rank_two and enumerate exist."""
        with pytest.raises(InvalidParameterError):
            nu_c(build_partition(torus_grid_cover, grid=8), method="sdp")

    def test_translation_invariance(self, torus_grid_cover):
        """Shifting every center by whole grid cells leaves nu_c unchanged."""
        shifted = BallCover(
            torus_grid_cover.domain,
            [
                Ball(((b.center[0] + 0.25) % 1.0, b.center[1]), b.radius, b.ball_id)
                for b in torus_grid_cover.balls
            ],
        )
        first = nu_c(build_partition(torus_grid_cover, grid=32)).nu_c
        second = nu_c(build_partition(shifted, grid=32)).nu_c
        assert second == pytest.approx(first, rel=1e-9)

    def test_refinement_is_monotone(self, torus_grid_cover):
        """Doubling the torus grid samples a superset of points."""
        values = [nu for _, nu in refinement_study(torus_grid_cover, resolutions=(16, 32, 64))]
        assert values[1] >= values[0] - 1e-12
        assert values[2] >= values[1] - 1e-12

    def test_scaling_slope(self, torus_grid_cover):
        """nu_c scales like r^-2."""
        report = scaling_study(torus_grid_cover, grid=32)
        assert report.slope == pytest.approx(-2.0, abs=0.2)
        assert len(report.radii) == 3


class TestLowerBound:
    """Tests for check_lower_bound."""

    def test_four_by_four_passes(self, torus_grid_cover):
        """nu_c clears 1/(2 d^2 pi r^2) on a 512 grid."""
        report = check_lower_bound(build_partition(torus_grid_cover, grid=512))
        r = 1.2 * 0.25 * math.sqrt(2) / 2
        assert report.status is BoundStatus.PASS
        assert report.ok
        assert report.d == 8
        assert report.r == pytest.approx(r)
        assert report.bound == pytest.approx(1 / (128 * math.pi * r**2))
        assert report.bound == pytest.approx(1 / (128 * math.pi * 0.045), rel=1e-9)
        assert report.nu_c >= report.bound

    def test_not_subordinate_is_skipped(self, torus_grid_cover):
        """Partitions wider than the cover make no claim."""
        pou = build_partition(torus_grid_cover, grid=16, support_factor=1.5)
        report = check_lower_bound(pou)
        assert report.status is BoundStatus.SKIPPED
        assert report.ok

    def test_single_ball_is_skipped(self):
        """d = 0 has no bound."""
        cover = BallCover(Domain.torus(1, 1), [Ball((0.5, 0.5), 0.8)])
        report = check_lower_bound(build_partition(cover, grid=16))
        assert report.status is BoundStatus.SKIPPED
        assert report.bound is None

    def test_fail_is_reported(self, torus_grid_cover):
        """A nu_c below the bound fails."""
        pou = build_partition(torus_grid_cover, grid=16)
        nu = nu_c(pou)
        nu.nu_c = 0.0
        report = check_lower_bound(pou, nu, energy_asserted=True)
        assert report.status is BoundStatus.FAIL
        assert not report.ok
        assert report.to_json()["energy_asserted"] is True
