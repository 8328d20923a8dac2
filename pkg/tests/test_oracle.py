import numpy as np
import pytest

from stokesheat import InvalidArgumentError, oracle_eigs


def test_k0_sector_validates_oracle():
    out = oracle_eigs(0, 200, 5)
    exact = np.array([(n * np.pi) ** 2 for n in range(1, 6)])
    assert np.abs(out.values - exact).max() / exact.min() <= 1e-6
    rel = np.abs(out.values - exact) / exact
    assert rel.max() <= 1e-6


def test_grid_refinement_stability():
    coarse = oracle_eigs(1, 200, 6)
    fine = oracle_eigs(1, 400, 6)
    rel = np.abs(coarse.values - fine.values) / fine.values
    assert rel.max() <= 1e-6


def test_positivity_and_error_estimates():
    out = oracle_eigs(2, 150, 8)
    assert np.all(out.values > 0)
    assert np.all(out.error_est >= 0)
    assert len(out.values) == 8
    assert np.all(np.diff(out.values) > 0)


def test_many_eigenvalues_single_sector():
    out = oracle_eigs(1, 200, 30)
    assert len(out.values) == 30
    assert np.all(np.diff(out.values) > 0)
    from stokesheat import sector_eigenvalues

    roots = sector_eigenvalues(1, float(out.values[-1]) * 1.02)[:30]
    rel = np.abs(np.array(roots) - out.values) / out.values
    assert rel.max() <= 1e-4  # second-order error grows with the eigenvalue


def test_preconditions():
    with pytest.raises(InvalidArgumentError):
        oracle_eigs(-1, 100, 3)
    with pytest.raises(InvalidArgumentError):
        oracle_eigs(1, 40, 3)
    with pytest.raises(InvalidArgumentError):
        oracle_eigs(1, 100, 0)
