"""Shared pytest fixtures for speckill tests."""
from __future__ import annotations

import os
import sys
from fractions import Fraction

import pytest

# Add project root to path for imports
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, PROJECT_ROOT)

MOCK_CONFIG_DIR = os.path.join(PROJECT_ROOT, "tests", "cli_tests", "mock_configs")

from speckill.certify.utils.certificate_infra import CertificationInput
from speckill.cover.utils.cover_infra import grid_cover
from speckill.floer.utils.orbit_infra import ManifoldModel, Mode
from speckill.radial.utils.pi_rational import PiRational


# ============================================================================
# Manifold Fixtures
# ============================================================================


@pytest.fixture
def monotone_model():
    """n = 1, lambda = -1, N = 1."""
    return ManifoldModel(n=1, lam=Fraction(-1), chern_gen=1, mode=Mode.MONOTONE)


@pytest.fixture
def aspherical_model():
    """n = 1 with no sphere classes."""
    return ManifoldModel(n=1, lam=Fraction(0), chern_gen=1, mode=Mode.ASPHERICAL)


# ============================================================================
# Certification Fixtures
# ============================================================================


@pytest.fixture
def scenario_input(monotone_model):
    """r = 0.35, eps = 0.05, E = 0.4, tau = 1e-6."""
    return CertificationInput(
        model=monotone_model,
        r=Fraction(7, 20),
        eps=Fraction(1, 20),
        energy=PiRational(Fraction(2, 5)),
        tau=PiRational(Fraction(1, 10**6)),
    )


@pytest.fixture
def aspherical_input(aspherical_model):
    """The scenario radii on an aspherical model."""
    return CertificationInput(
        model=aspherical_model,
        r=Fraction(7, 20),
        eps=Fraction(1, 20),
        energy=PiRational(Fraction(2, 5)),
        tau=PiRational(Fraction(1, 10**6)),
    )


# ============================================================================
# Cover Fixtures
# ============================================================================


@pytest.fixture
def torus_grid_cover():
    """4 x 4 grid of disks on the unit torus with 20% overlap."""
    return grid_cover(4, 4, overlap=0.2, side=1.0)


@pytest.fixture
def mock_config_dir():
    """Directory of the JSON run configs used by the CLI tests."""
    return MOCK_CONFIG_DIR
