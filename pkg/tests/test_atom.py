"""Tests for the neutral-atom form factor, screened energy, and localization."""

import math

import numpy as np
import pytest

from selffield.errors import NoLocalizationError
from selffield.scales import CONST, ELECTRON, EV, PROTON, derived_scales
from selffield.localization import minimize_radius, scale_to_particle
from selffield.atom import (NeutralAtom, atom_charge_density_fourier,
                            atom_electrostatic_energy,
                            atom_electrostatic_energy_quadrature,
                            atom_minimize, bare_nucleus_energy,
                            helium_atom, hydrogen_atom, screened_bracket)

A_B = derived_scales(ELECTRON, 0.0).bohr_like_length


def test_atom_validation():
    with pytest.raises(ValueError):
        NeutralAtom(z_nucleus=0, mass_total=PROTON.mass, gamma=A_B)
    with pytest.raises(ValueError):
        NeutralAtom(z_nucleus=1, mass_total=PROTON.mass, gamma=0.0)
    with pytest.raises(ValueError):
        NeutralAtom(z_nucleus=2, mass_total=PROTON.mass, gamma=A_B)


def test_form_factor_neutrality():
    atom = hydrogen_atom()
    assert atom_charge_density_fourier(atom, A_B, 0.0) == 0.0


def test_form_factor_pointlike_cloud_limit():
    atom = NeutralAtom(z_nucleus=1, mass_total=PROTON.mass + ELECTRON.mass,
                       gamma=1e-20)
    value = atom_charge_density_fourier(atom, A_B, 1.0 / A_B)
    assert abs(value) / CONST.e_charge < 1e-15    # point cloud cancels nucleus


def test_form_factor_value():
    # b = gamma, q = 1/gamma: Z e exp(-1) (1 - exp(-1))
    atom = hydrogen_atom()
    g = atom.gamma
    expected = CONST.e_charge * math.exp(-1.0) * (1.0 - math.exp(-1.0))
    assert atom_charge_density_fourier(atom, g, 1.0 / g) == pytest.approx(
        expected, rel=1e-12)
    assert expected / CONST.e_charge == pytest.approx(0.23254, rel=1e-4)


def test_energy_bracket_value_at_b_equals_gamma():
    # 1 - 2 sqrt(2)/sqrt(3) + 1/sqrt(2) = 0.0741136
    assert screened_bracket(1.0, 1.0) == pytest.approx(0.07411362, rel=1e-6)
    atom = hydrogen_atom()
    expected = bare_nucleus_energy(atom, atom.gamma) * 0.07411362
    assert atom_electrostatic_energy(atom, atom.gamma) == pytest.approx(
        expected, rel=1e-6)


def test_energy_delocalized_limit():
    atom = hydrogen_atom()
    b = 1e3 * atom.gamma
    assert atom_electrostatic_energy(atom, b) <= 1e-5 * bare_nucleus_energy(atom, b)


def test_energy_bare_nucleus_limit():
    atom = hydrogen_atom()
    b = 1e-3 * atom.gamma
    rel = abs(atom_electrostatic_energy(atom, b) - bare_nucleus_energy(atom, b)) \
        / bare_nucleus_energy(atom, b)
    assert rel <= 2e-3


def test_energy_quadrature_twin():
    atom = hydrogen_atom()
    for b in (1e-3 * atom.gamma, 0.3 * atom.gamma, atom.gamma, 5 * atom.gamma,
              1e3 * atom.gamma):
        closed = atom_electrostatic_energy(atom, b)
        numeric = atom_electrostatic_energy_quadrature(atom, b)
        assert numeric == pytest.approx(closed, rel=1e-10)


def test_bracket_bounds_and_monotonicity():
    # bracket in [0, 1/b], non-decreasing in gamma: 50 x 50 log grid
    b_grid = np.logspace(-2, 2, 50)
    g_grid = np.logspace(-2, 2, 50)
    for b in b_grid:
        vals = [screened_bracket(float(b), float(g)) for g in g_grid]
        assert min(vals) >= -1e-12 / b
        assert max(vals) <= (1.0 + 1e-12) / b
        for lo, hi in zip(vals, vals[1:]):
            assert hi >= lo - 1e-12 / b


def test_energy_continuity_at_crossover():
    atom = hydrogen_atom()
    bs = np.linspace(0.8 * atom.gamma, 1.25 * atom.gamma, 200)
    vals = np.array([atom_electrostatic_energy(atom, float(b)) for b in bs])
    steps = np.abs(np.diff(vals)) / vals[:-1]
    assert steps.max() < 1e-2    # smooth at the resolution of the scan


def test_atom_minimize_hydrogen_b_star():
    # b* within 1% of the bare-nucleus prediction at Z=1, M = m_p + m_e
    atom = hydrogen_atom()
    res = atom_minimize(atom, 0.1)
    electron_res = minimize_radius(ELECTRON, 0.1)
    bare = scale_to_particle(electron_res, 1, atom.mass_total)
    assert res.b_star == pytest.approx(bare.b_star, rel=0.01)
    assert res.b_star == pytest.approx(8.1e-12, rel=0.02)


def test_atom_minimize_deep_bare_regime():
    # with a very diffuse cloud (b* << gamma) both radius and binding match
    # the bare-nucleus scaling to 1%
    atom = NeutralAtom(z_nucleus=1, mass_total=PROTON.mass + ELECTRON.mass,
                       gamma=300.0 * A_B)
    res = atom_minimize(atom, 0.1)
    bare = scale_to_particle(minimize_radius(ELECTRON, 0.1), 1, atom.mass_total)
    assert res.b_star == pytest.approx(bare.b_star, rel=0.01)
    assert res.binding_energy == pytest.approx(bare.binding_energy, rel=0.01)


def test_atom_minimize_gamma_infinite_is_bare():
    atom = NeutralAtom(z_nucleus=1, mass_total=PROTON.mass + ELECTRON.mass,
                       gamma=1e6 * A_B)
    res = atom_minimize(atom, 0.1)
    bare = scale_to_particle(minimize_radius(ELECTRON, 0.1), 1, atom.mass_total)
    assert res.b_star == pytest.approx(bare.b_star, rel=1e-6)
    assert res.binding_energy == pytest.approx(bare.binding_energy, rel=1e-6)


def test_atom_minimize_no_localization_cases():
    with pytest.raises(NoLocalizationError):
        atom_minimize(hydrogen_atom(), 0.0)
    # tight cloud screens the nucleus before the bare minimum is reached
    screened = NeutralAtom(z_nucleus=1, mass_total=PROTON.mass + ELECTRON.mass,
                           gamma=1e-3 * A_B)
    with pytest.raises(NoLocalizationError):
        atom_minimize(screened, 0.1)


def test_presets():
    h = hydrogen_atom()
    assert h.z_nucleus == 1
    assert h.mass_total == pytest.approx(1837.15 * ELECTRON.mass, rel=1e-5)
    assert h.gamma == pytest.approx(A_B, rel=1e-12)
    he = helium_atom()
    assert he.z_nucleus == 2
    assert he.mass_total == pytest.approx(4.0026 * 1822.89 * ELECTRON.mass, rel=1e-4)
