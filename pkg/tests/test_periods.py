import numpy as np
import pytest

from kzcocycle.cyclic_cover import parse_spec
from kzcocycle.hodge_analytic import rauch_check
from kzcocycle.periods import CoverPeriods, period_matrix, symplectic_basis

M6 = parse_spec("M6(1,1,1,3)")


@pytest.fixture(scope="module")
def periods():
    return CoverPeriods(M6, 1j)


def test_symplectic_basis_standard_form(periods):
    j = periods.model.intersection
    s = symplectic_basis(j)
    g = j.shape[0] // 2
    std = np.block([[np.zeros((g, g)), np.eye(g)], [-np.eye(g), np.zeros((g, g))]])
    assert np.allclose(s.T @ j @ s, std)


def test_riemann_bilinear_relations(periods):
    pi, _ = period_matrix(periods)
    assert np.abs(pi - pi.T).max() < 1e-8
    assert np.linalg.eigvalsh(pi.imag).min() > 0


@pytest.mark.parametrize("direction", [-1, 1])
def test_period_variation(direction):
    rep = rauch_check(M6, tau=1j, dt=1e-3, halvings=1, direction=direction)
    assert rep.relative_errors[-1] < 1e-3
    assert rep.observed_order == pytest.approx(2.0, abs=0.2)
