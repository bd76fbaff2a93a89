import numpy as np
import pytest

from rfdress.constants import DEFAULT, RB87_F1, RB87_F2
from rfdress.dressed import DressedConfig, potential_function, static_potential_function
from rfdress.errors import AllMasked, EvaluationOnWire, NoConvergence
from rfdress.fieldkit import IdealIoffeQuad, RfDrive, StaticScene
from rfdress.trapscape import GridRegion, ScalarFieldGrid, find_minima, refine_minimum, sample_grid


def quartic_x(b=-1e-28, d=1e-16, c=2e-28):
    def V(r):
        r = np.asarray(r, dtype=float)
        x, y, z = r[..., 0], r[..., 1], r[..., 2]
        return b * x**2 + d * x**4 + c * (y**2 + z**2)

    return V


def test_constant_potential_grid():
    grid = sample_grid(lambda r: np.full(np.shape(r)[:-1], 3.0), GridRegion(np.zeros(3), half_widths=1e-6), 9)
    assert grid.shape == (9, 9)
    assert np.all(grid.values == 3.0) and not grid.mask.any()


def test_grid_resolution_minimum():
    with pytest.raises(ValueError):
        sample_grid(quartic_x(), GridRegion(np.zeros(3)), 7)


def test_grid_region_validation():
    with pytest.raises(ValueError):
        GridRegion(np.zeros(3), axes=[[1, 0, 0], [1, 0, 0]])
    with pytest.raises(ValueError):
        GridRegion(np.zeros(3), half_widths=0.0)


def test_scalar_grid_validation():
    with pytest.raises(ValueError):
        ScalarFieldGrid(np.zeros(3), np.eye(3)[:2], np.array([1.0, 0.0]), np.zeros((3, 3)), np.zeros((3, 3), bool))
    with pytest.raises(ValueError):
        ScalarFieldGrid(np.zeros(3), np.eye(3)[:2], np.ones(2), np.zeros((3, 3, 3)), np.zeros((3, 3, 3), bool))


def test_masked_samples_and_all_masked():
    def partly(r):
        r = np.asarray(r)
        if r.ndim > 1 and len(r) > 1:
            raise EvaluationOnWire(r[0], None)  # force the pointwise fallback
        if r.reshape(-1, 3)[0, 0] > 0:
            raise EvaluationOnWire(r, None)
        return np.sum(r**2, axis=-1)

    with pytest.warns(UserWarning):
        grid = sample_grid(partly, GridRegion(np.zeros(3), half_widths=1.0), 9)
    assert grid.mask[5:, :].all() and not grid.mask[:5, :].any()
    assert np.isnan(grid.values[grid.mask]).all()

    def never(r):
        raise EvaluationOnWire(np.zeros(3), None)

    with pytest.raises(AllMasked):
        sample_grid(never, GridRegion(np.zeros(3)), 8)


def test_synthetic_quartic_minima():
    res = find_minima(quartic_x(), seeds=[[1e-6, 0.3e-6, 0], [-3e-6, -0.2e-6, 0.1e-6], [2.5e-6, 0, 0]], gtol_rel=1e-12)
    xs = sorted(r.position[0] for r in res)
    x0 = np.sqrt(1e-28 / (2 * 1e-16))
    np.testing.assert_allclose(xs, [-x0, x0], rtol=1e-4)
    assert len(res) == 2  # the two seeds on the right merge
    for rep in res:
        lam = rep.curvatures
        assert rep.is_minimum and lam[0] >= -1e-6 * lam[-1]


def test_grid_seeding_finds_both_wells():
    region = GridRegion(np.zeros(3), half_widths=5e-6)
    grid = sample_grid(quartic_x(), region, 41)
    assert len(grid.local_minima()) == 2
    res = find_minima(quartic_x(), grid=grid, gtol_rel=1e-12)
    assert len(res) == 2
    with pytest.raises(ValueError):
        find_minima(quartic_x())


def test_failed_seed_reported_not_raised():
    def tilted(r):
        r = np.asarray(r, dtype=float)
        return -1e-20 * r[..., 0] + 1e-18 * r[..., 1] ** 2

    res = find_minima(tilted, seeds=[[0, 0, 0]], axes=np.eye(3)[:2], max_iter=20)
    assert len(res) == 0 and len(res.failures) == 1
    assert isinstance(res.failures[0][1], NoConvergence)
    with pytest.raises(NoConvergence):
        refine_minimum(tilted, [0, 0, 0], np.eye(3)[:2], max_iter=20)


def test_static_ioffe_trap_frequency(ideal_scene):
    V = static_potential_function(ideal_scene, RB87_F2, include_gravity=False)
    region = GridRegion(np.zeros(3), half_widths=5e-6)
    grid = sample_grid(V, region, 21)
    idx = np.unravel_index(np.nanargmin(grid.values), grid.shape)
    np.testing.assert_allclose(grid.position(idx), 0, atol=1e-12)
    res = find_minima(V, seeds=[[1e-6, -2e-6, 0]], axes=region.axes, mass=RB87_F2.mass, gtol_rel=1e-12)
    assert len(res) == 1
    rep = res[0]
    np.testing.assert_allclose(rep.position, 0, atol=1e-9)
    expected = 23.513 * np.sqrt(DEFAULT.mu_B / (RB87_F2.mass * 1e-4)) / (2 * np.pi)
    assert expected == pytest.approx(3000, rel=1e-3)
    np.testing.assert_allclose(rep.frequencies / (2 * np.pi), expected, rtol=1e-3)
    assert np.all(np.diff(rep.frequencies) >= 0)


def ring_scene():
    return StaticScene([IdealIoffeQuad(1.0, 1e-4)], gravity=(0, 0, 0))


def ring_radius(species, omega=2 * np.pi * 1e6, G=1.0, B_I=1e-4):
    return np.sqrt(species.larmor_field(omega) ** 2 - B_I**2) / G


def test_ring_radius_oracle():
    assert ring_radius(RB87_F2) * 1e6 == pytest.approx(102.08, abs=0.01)


@pytest.mark.parametrize("species, delta", [(RB87_F2, 3 * np.pi / 2), (RB87_F1, np.pi / 2)])
def test_ring_minima_from_azimuthal_seeds(species, delta):
    drive = RfDrive.homogeneous(1e-5, 1e-5, delta, 2 * np.pi * 1e6)
    V = potential_function(ring_scene(), drive, DressedConfig(species, include_gravity=False))
    rho = ring_radius(species)
    seeds = [0.9 * rho * np.array([np.cos(a), np.sin(a), 0]) for a in np.arange(8) * np.pi / 4]
    res = find_minima(V, seeds=seeds, axes=np.eye(3)[:2])
    assert len(res) >= 8 and not res.failures
    radii = np.array([np.hypot(*r.position[:2]) for r in res])
    np.testing.assert_allclose(radii, rho, rtol=1e-2)


def test_reports_sorted_by_potential():
    V = quartic_x()
    asym = lambda r: V(r) + 1e-36 * np.asarray(r)[..., 0]  # noqa: E731
    res = find_minima(asym, seeds=[[2e-6, 0, 0], [-2e-6, 0, 0]], gtol_rel=1e-12)
    assert res[0].potential <= res[1].potential
    assert res[0].position[0] < 0
