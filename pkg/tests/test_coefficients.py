import numpy as np
import pytest

from bellsub.coefficients import (DEFAULT_COEFFICIENTS, determine_coefficients,
                                  minimal_coefficients, reduced_margin,
                                  validate_coefficients)
from bellsub.errors import ConfigError


def test_defaults_certified_on_large_random_bank():
    margin, worst = validate_coefficients(DEFAULT_COEFFICIENTS, grid_size=16,
                                          n_random=1_000_000, seed=99)
    assert margin >= 0.0


def test_determine_returns_validated_defaults():
    assert determine_coefficients(n_random=50_000) == DEFAULT_COEFFICIENTS
    assert determine_coefficients(DEFAULT_COEFFICIENTS, n_random=50_000) \
        == DEFAULT_COEFFICIENTS


def test_homogeneity_doubling_preserves_feasibility():
    doubled = tuple(2.0 * c for c in DEFAULT_COEFFICIENTS)
    margin, _ = validate_coefficients(doubled, n_random=50_000)
    assert margin >= 0.0


def test_minimal_coefficients_sit_on_the_boundary():
    margin, _ = validate_coefficients(minimal_coefficients(), n_random=50_000,
                                      tol=1e-12)
    assert -1e-12 <= margin <= 1e-9   # zero up to float rounding of sqrt(3)


def test_dropping_c7_fails_on_a_pure_rs_direction():
    draft = (0.5, 2.4, 2.4, 0.0)
    with pytest.raises(ConfigError) as err:
        determine_coefficients(draft, n_random=50_000)
    assert "direction" in str(err.value)
    # the violating mechanism is explicit: no |dx|, |dy| content
    m = reduced_margin(draft, 0.0, 0.0, 1.0, 1.0)
    assert m < 0.0


def test_too_small_c1_is_rejected():
    with pytest.raises(ConfigError):
        determine_coefficients((0.4, 2.4, 2.4, 600.0), n_random=50_000)


def test_validation_rejects_nonpositive():
    with pytest.raises(ConfigError):
        validate_coefficients((0.0, 1.0, 1.0, 1.0))
