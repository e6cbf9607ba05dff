"""Configuration, coefficient, preset, and initial-data tests."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from phenofront.grid import compute_rho
from phenofront.model import (
    IC_TAIL_CUTOFF,
    ConfigError,
    ModelSpec,
    RationalFunction,
    RunConfig,
    SolverTolerances,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    eval_fitness,
    eval_growth_rate,
    eval_mobility,
    initial_density,
    preset,
    preset_names,
)


def quadratic_model(**overrides) -> ModelSpec:
    fields = dict(
        y_max=1.0,
        mobility=RationalFunction(num=(0.01, 0.0, 1.0)),
        growth_rate=RationalFunction(num=(1.0, 0.0, -1.0)),
        rho_max=1.0,
        epsilon=0.01,
        ic_center=0.2,
    )
    fields.update(overrides)
    return ModelSpec(**fields)


def small_config(**overrides) -> RunConfig:
    fields = dict(
        model=quadratic_model(),
        x_max=2.0,
        t_max=0.1,
        dt=0.01,
        dx=0.25,
        dy=0.25,
    )
    fields.update(overrides)
    return RunConfig(**fields)


class TestRationalFunction:
    def test_polynomial_evaluation(self):
        f = RationalFunction(num=(1.0, 0.0, -1.0))  # 1 - y^2
        assert f(0.0) == 1.0
        assert f(1.0) == 0.0
        np.testing.assert_allclose(f(np.array([0.5])), [0.75])

    def test_rational_evaluation(self):
        f = RationalFunction(num=(1.0,), den=(1.0, 1.0))  # 1/(1+y)
        assert f(0.0) == 1.0
        assert f(1.0) == 0.5

    def test_derivative_of_quotient(self):
        f = RationalFunction(num=(1.0,), den=(1.0, 1.0))
        df = f.derivative()
        y = np.linspace(0.0, 3.0, 7)
        np.testing.assert_allclose(df(y), -1.0 / (1.0 + y) ** 2, rtol=1e-12)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ConfigError):
            RationalFunction(num=())
        with pytest.raises(ConfigError):
            RationalFunction(num=(np.nan,))
        with pytest.raises(ConfigError):
            RationalFunction(num=(1.0,), den=(0.0,))


class TestModelSpecValidation:
    def test_accepts_reference_model(self):
        quadratic_model()

    @pytest.mark.parametrize(
        "overrides",
        [
            {"y_max": 0.0},
            {"y_max": -1.0},
            {"rho_max": 0.0},
            {"epsilon": 0.0},
            {"ic_center": -0.1},
            {"ic_center": 1.5},
        ],
    )
    def test_rejects_bad_scalars(self, overrides):
        with pytest.raises(ConfigError):
            quadratic_model(**overrides)


class TestRunConfigValidation:
    def test_accepts_small_config(self):
        config = small_config()
        assert config.n_steps == 10
        assert config.build_grid().shape == (8, 4)

    def test_rejects_non_tiling_steps(self):
        with pytest.raises(ConfigError):
            small_config(dx=0.3)
        with pytest.raises(ConfigError):
            small_config(dt=0.03)

    def test_rejects_bad_output_times(self):
        with pytest.raises(ConfigError):
            small_config(output_times=(0.05, 0.02))  # unsorted
        with pytest.raises(ConfigError):
            small_config(output_times=(0.2,))  # beyond t_max
        with pytest.raises(ConfigError):
            small_config(output_times=(0.005,))  # off the step lattice
        with pytest.raises(ConfigError):
            small_config(output_times=(0.01, 0.01))  # duplicate

    def test_rejects_bad_levels(self):
        with pytest.raises(ConfigError):
            small_config(level_values=(0.0,))
        with pytest.raises(ConfigError):
            small_config(level_values=(1.0,))

    def test_rejects_decreasing_mobility(self):
        model = quadratic_model(mobility=RationalFunction(num=(1.0, -0.5)))
        with pytest.raises(ConfigError):
            small_config(model=model)

    def test_rejects_increasing_growth(self):
        model = quadratic_model(growth_rate=RationalFunction(num=(1.0, 0.5)))
        with pytest.raises(ConfigError):
            small_config(model=model)

    def test_rejects_growth_mismatch_at_origin(self):
        model = quadratic_model(rho_max=2.0)
        with pytest.raises(ConfigError):
            small_config(model=model)

    def test_output_steps_mapping(self):
        config = small_config(output_times=(0.0, 0.05, 0.1))
        assert config.output_steps() == {0: 0.0, 5: 0.05, 10: 0.1}


class TestTolerances:
    def test_defaults(self):
        tol = SolverTolerances()
        assert tol.picard == 1e-10
        assert tol.max_picard_iters == 100
        assert tol.linear == 1e-12
        assert tol.root == 1e-12
        assert tol.density_floor == 0.0

    @pytest.mark.parametrize(
        "overrides",
        [
            {"picard": 0.0},
            {"linear": -1e-12},
            {"root": np.nan},
            {"max_picard_iters": 0},
            {"density_floor": -1.0},
        ],
    )
    def test_rejects_bad_values(self, overrides):
        with pytest.raises(ConfigError):
            SolverTolerances(**overrides)


class TestCoefficientEvaluation:
    def test_reference_values(self):
        model = quadratic_model()
        assert eval_mobility(model, 0.0) == pytest.approx(0.01)
        assert eval_mobility(model, 1.0) == pytest.approx(1.01)
        assert eval_growth_rate(model, 0.0) == pytest.approx(1.0)
        assert eval_growth_rate(model, 1.0) == pytest.approx(0.0)
        assert eval_fitness(model, 0.5, 0.25) == pytest.approx(0.5)

    def test_rejects_out_of_domain(self):
        model = quadratic_model()
        with pytest.raises(ValueError):
            eval_mobility(model, -0.1)
        with pytest.raises(ValueError):
            eval_growth_rate(model, 1.1)

    def test_array_evaluation(self):
        model = quadratic_model()
        y = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(eval_mobility(model, y), 0.01 + y**2)
        np.testing.assert_allclose(eval_fitness(model, y, 1.0), -(y**2))


class TestPresets:
    def test_names(self):
        assert preset_names() == ["fig1", "fig2"]

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            preset("fig3")

    def test_quadratic_preset(self):
        config = preset("fig1")
        assert config.model.y_max == 1.0
        assert config.model.epsilon == 0.01
        assert config.model.rho_max == 1.0
        assert config.model.ic_center == 0.2
        assert (config.x_max, config.t_max) == (25.0, 8.0)
        assert (config.dt, config.dx, config.dy) == (0.01, 0.01, 0.02)
        assert config.output_times == (0.0, 4.0, 6.0, 8.0)
        assert config.level_values == (0.2, 0.6, 0.8)
        y = np.linspace(0.0, 1.0, 11)
        np.testing.assert_allclose(config.model.mobility(y), 0.01 + y**2)
        np.testing.assert_allclose(config.model.growth_rate(y), 1.0 - y**2)

    def test_quartic_preset(self):
        config = preset("fig2")
        assert config.model.y_max == 20.0
        assert (config.x_max, config.t_max) == (200.0, 8.0)
        assert (config.dt, config.dx, config.dy) == (0.002, 0.1, 0.05)
        assert config.level_values == (0.1, 0.25, 0.45, 0.8)
        y = np.linspace(0.0, 20.0, 11)
        np.testing.assert_allclose(config.model.mobility(y), 0.01 + y**4)
        np.testing.assert_allclose(config.model.growth_rate(y), 1.0 / (1.0 + y))

    def test_presets_are_fresh_instances(self):
        assert preset("fig1") is not preset("fig1")


class TestSerialization:
    def test_round_trip_both_presets(self):
        for name in preset_names():
            config = preset(name)
            rebuilt = config_from_dict(config_to_dict(config))
            assert config_to_dict(rebuilt) == config_to_dict(config)

    def test_preset_key_with_overrides(self):
        data = {
            "preset": "fig1",
            "domain": {"t_max": 2.0},
            "steps": {"dt": 0.02},
            "output": {"times": [0.0, 2.0]},
        }
        config = config_from_dict(data)
        assert config.t_max == 2.0
        assert config.dt == 0.02
        assert config.dx == 0.01  # untouched preset value
        assert config.output_times == (0.0, 2.0)

    def test_preset_key_shortening_requires_consistent_times(self):
        # the dict loader validates strictly; only apply_overrides drops
        # output times beyond a shortened horizon
        with pytest.raises(ConfigError):
            config_from_dict({"preset": "fig1", "domain": {"t_max": 2.0}})

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"preset": "fig1", "bogus": {}})

    def test_missing_section_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"model": {}})


class TestApplyOverrides:
    def test_scalar_overrides(self):
        config = apply_overrides(preset("fig1"), {"dx": 0.025, "dy": 0.04, "x_max": 30.0})
        assert (config.dx, config.dy, config.x_max) == (0.025, 0.04, 30.0)
        assert config.dt == 0.01

    def test_shortening_drops_late_output_times(self):
        config = apply_overrides(preset("fig1"), {"t_max": 4.0})
        assert config.output_times == (0.0, 4.0)

    def test_epsilon_override(self):
        config = apply_overrides(preset("fig1"), {"epsilon": 0.04})
        assert config.model.epsilon == 0.04

    def test_none_values_ignored(self):
        config = apply_overrides(preset("fig1"), {"dt": None})
        assert config.dt == 0.01

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            apply_overrides(preset("fig1"), {"urgency": 11})


class TestInitialDensity:
    def test_exact_formula_without_truncation(self):
        """With the tail cutoff disabled the closed form holds at every cell."""
        config = small_config()
        grid = config.build_grid()
        field = initial_density(config, tail_cutoff=0.0)
        m = config.model
        trait = np.exp(-((grid.y_centers - m.ic_center) ** 2) / m.epsilon)
        norm = grid.dy * trait.sum()
        expected = np.exp(-grid.x_centers[:, None] ** 2) * trait[None, :] / norm
        np.testing.assert_allclose(field.values, expected, rtol=1e-15)
        assert field.time_label == 0.0

    def test_discrete_column_density_is_exact_gaussian(self):
        config = small_config()
        grid = config.build_grid()
        rho = compute_rho(initial_density(config, tail_cutoff=0.0), grid)
        np.testing.assert_allclose(
            rho.values, np.exp(-grid.x_centers**2), rtol=1e-13
        )

    def test_default_truncation_clears_far_tail(self):
        config = small_config(x_max=8.0, dx=0.25)
        grid = config.build_grid()
        field = initial_density(config)
        rho = compute_rho(field, grid).values
        gauss = np.exp(-grid.x_centers**2)
        inside = gauss >= IC_TAIL_CUTOFF
        np.testing.assert_allclose(rho[inside], gauss[inside], rtol=1e-13)
        assert (field.values[~inside, :] == 0.0).all()
        assert inside.any() and (~inside).any()

    def test_truncation_threshold_is_six_orders_down(self):
        assert IC_TAIL_CUTOFF == 1e-6
