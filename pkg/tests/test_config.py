"""
Tests for configuration loading, overrides, validation and resolution
"""

import json

import pytest

from flm_threshold.analysis.model import LinkPattern
from flm_threshold.analysis.rates import RateTarget, m_star
from flm_threshold.core.config_manager import (MIN_TRUNCATION, OUTPUT_DIR_ENV, ConfigurationManager,
                                               ExperimentConfig, config_to_dict, dict_to_config,
                                               is_low_power, process_spec, rate_case, slope_spec)
from flm_threshold.core.exceptions import ConfigValidationError

PRESET_NAMES = [
    "exp_a05_prediction",
    "poly_link_d2_alternating",
    "poly_p1_a1_prediction",
    "poly_p2_a1_derivative_s0",
    "poly_p2_a1_derivative_s1",
]


@pytest.fixture
def manager():
    return ConfigurationManager()


def _key_of(excinfo):
    return excinfo.value.key


class TestDefaults:

    def test_defaults_validate(self, manager):
        findings = manager.validate(ExperimentConfig())
        assert isinstance(findings, list)

    def test_default_resolution(self, manager):
        resolved = manager.resolve(ExperimentConfig())
        assert resolved.process.truncation == MIN_TRUNCATION + 1
        assert manager.dimensions(resolved) == [4, 4, 5, 6, 7]

    def test_resolution_leaves_input_untouched(self, manager):
        config = ExperimentConfig()
        manager.resolve(config)
        assert config.process.truncation is None

    def test_explicit_truncation_kept(self, manager, small_config):
        assert manager.resolve(small_config).process.truncation == 16

    def test_explicit_slope_extends_truncation(self, manager):
        config = ExperimentConfig()
        config.slope.profile = "explicit"
        config.slope.coeffs = [0.01] * 200
        config.slope.p = 0.0
        config.slope.rho = 1.0
        assert manager.resolve(config).process.truncation == 201


class TestValidation:

    @pytest.mark.parametrize("override, key", [
        ("process.a=0.4", "process.a"),
        ("process.decay=\"gamma\"", "process.decay"),
        ("process.d=0.5", "process.d"),
        ("process.sigma=-1", "process.sigma"),
        ("process.error_law=\"student_t\"", "process.df"),
        ("process.truncation=2", "process.truncation"),
        ("slope.rho=0", "slope.rho"),
        ("slope.p=-1", "slope.p"),
        ("estimator.m=0", "estimator.m"),
        ("estimator.m=\"sqrt\"", "estimator.m"),
        ("estimator.gamma=-2", "estimator.gamma"),
        ("estimator.threshold_power=3", "estimator.threshold_power"),
        ("estimator.s=2", "estimator.s"),
        ("experiment.replications=1", "experiment.replications"),
        ("experiment.n_grid=[1000,500]", "experiment.n_grid"),
        ("experiment.n_grid=[]", "experiment.n_grid"),
        ("experiment.weight_kind=\"huber\"", "experiment.weight_kind"),
        ("experiment.workers=0", "experiment.workers"),
        ("experiment.side_condition_k=3", "experiment.side_condition_k"),
        ("output.formats=[\"png\"]", "output.formats"),
    ])
    def test_invalid_values_name_the_key(self, manager, override, key):
        config = manager.apply_overrides(ExperimentConfig(), [override])
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.validate(config)
        assert _key_of(excinfo) == key
        assert str(excinfo.value).startswith(key)

    def test_prediction_risk_needs_zero_order(self, manager):
        config = manager.apply_overrides(ExperimentConfig(), ["estimator.s=1"])
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.validate(config)
        assert _key_of(excinfo) == "experiment.weight_kind"

    def test_dimension_above_truncation(self, manager):
        config = manager.apply_overrides(ExperimentConfig(), ["process.truncation=4", "estimator.m=5"])
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.validate(config)
        assert _key_of(excinfo) == "estimator.m"

    def test_explicit_slope_outside_ellipsoid(self, manager):
        config = manager.apply_overrides(ExperimentConfig(), [
            "slope.profile=\"explicit\"", "slope.p=0", "slope.coeffs=[0.0, 1.5]"])
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.validate(config)
        assert _key_of(excinfo) == "slope.coeffs"

    def test_derivative_above_smoothness_override(self, manager):
        base = ["estimator.s=2", "experiment.weight_kind=\"derivative_l2\"",
                "estimator.allow_s_above_p=true"]
        config = manager.apply_overrides(ExperimentConfig(), base)
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.validate(config)
        assert _key_of(excinfo) == "estimator.m"

        config = manager.apply_overrides(ExperimentConfig(), base + ["estimator.m=3", "estimator.gamma=100"])
        findings = manager.validate(config)
        assert any("exceeds smoothness" in f for f in findings)

    def test_threshold_n_reports_consistency_growth(self, manager):
        findings = manager.validate(ExperimentConfig())
        assert any("grows" in f for f in findings)


class TestOverrides:

    def test_values_are_json_decoded(self, manager):
        config = manager.apply_overrides(ExperimentConfig(), [
            "process.a=2", "experiment.n_grid=[100, 200, 400]", "estimator.gamma=n",
            "output.directory=out/run1", "name=custom"])
        assert config.process.a == 2
        assert config.experiment.n_grid == [100, 200, 400]
        assert config.estimator.gamma == "n"
        assert config.output.directory == "out/run1"
        assert config.name == "custom"

    def test_original_not_modified(self, manager):
        config = ExperimentConfig()
        manager.apply_overrides(config, ["process.a=3"])
        assert config.process.a == 1.0

    @pytest.mark.parametrize("override", ["process.bogus=1", "nosection=1", "a.b.c=1", "process.a"])
    def test_invalid_overrides(self, manager, override):
        with pytest.raises(ConfigValidationError):
            manager.apply_overrides(ExperimentConfig(), [override])


class TestFiles:

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigValidationError) as excinfo:
            dict_to_config({'process': {'bogus': 1}})
        assert _key_of(excinfo) == "process.bogus"

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigValidationError):
            dict_to_config({'extra': 1})

    def test_save_and_load(self, manager, small_config, tmp_path):
        path = tmp_path / "cfg.json"
        manager.save(small_config, path)
        loaded = manager.load(str(path))
        assert config_to_dict(loaded) == config_to_dict(small_config)

    def test_sidecar_is_loadable(self, manager, small_config, tmp_path):
        path = tmp_path / "sample.json"
        path.write_text(json.dumps({'config': config_to_dict(small_config), 'schema_version': "1.0",
                                    'kind': 'sample'}))
        assert config_to_dict(manager.load(str(path))) == config_to_dict(small_config)

    def test_missing_file(self, manager, tmp_path):
        with pytest.raises(ConfigValidationError):
            manager.load(str(tmp_path / "missing.json"))

    def test_invalid_json(self, manager, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.load(str(path))
        assert _key_of(excinfo) == "file"

    def test_unknown_preset(self, manager):
        with pytest.raises(ConfigValidationError) as excinfo:
            manager.load("no_such_preset")
        assert _key_of(excinfo) == "preset"

    def test_output_directory_precedence(self, manager, monkeypatch):
        config = ExperimentConfig()
        monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
        assert str(manager.output_directory(config)) == "results"
        monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/flm")
        assert str(manager.output_directory(config)) == "/tmp/flm"
        config.output.directory = "here"
        assert str(manager.output_directory(config)) == "here"


class TestPresets:

    def test_listing(self, manager):
        assert [p['name'] for p in manager.list_presets()] == PRESET_NAMES

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_presets_validate(self, manager, name):
        config = manager.load(name)
        assert config.name == name
        manager.validate(config)
        resolved = manager.resolve(config)
        assert resolved.process.truncation >= MIN_TRUNCATION
        assert resolved.process.truncation % 2 == 1

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_achieved_delta_bounded(self, manager, name):
        config = manager.resolve(manager.load(name))
        case = rate_case(config)
        for n in config.experiment.n_grid:
            bal = m_star(n, case.b(), case.omega(), case.upsilon())
            assert 1.0 <= bal.achieved_delta < 1e3
            if bal.m_star > 1:
                assert bal.achieved_delta <= bal.jump

    @pytest.mark.parametrize("name", ["poly_p2_a1_derivative_s0", "poly_p2_a1_derivative_s1"])
    def test_derivative_presets_use_odd_dimension(self, manager, name):
        config = manager.resolve(manager.load(name))
        assert manager.dimensions(config) == [7, 7, 7, 9, 9]

    def test_exp_preset_threshold(self, manager):
        config = manager.resolve(manager.load("exp_a05_prediction"))
        m = manager.dimension(config, 1000)
        assert m == 7
        assert manager.threshold(config, 1000, m) == pytest.approx(8.0 * 2.718281828459045 ** 7, rel=1e-12)


class TestBuilders:

    def test_process_spec_requires_resolution(self):
        with pytest.raises(ConfigValidationError):
            process_spec(ExperimentConfig())

    def test_process_spec(self, manager):
        config = manager.resolve(manager.load("poly_link_d2_alternating"))
        proc = process_spec(config)
        assert proc.link_pattern == LinkPattern.ALTERNATING
        assert proc.d == 2.0
        assert proc.satisfies_link_condition()

    def test_rate_case_targets(self):
        config = ExperimentConfig()
        config.experiment.weight_kind = "upsilon"
        assert rate_case(config).target == RateTarget.PREDICTION
        config.experiment.weight_kind = "l2"
        assert rate_case(config).target == RateTarget.DERIVATIVE_L2

    def test_slope_spec(self, small_config):
        spec = slope_spec(small_config)
        assert (spec.p, spec.rho) == (1.0, 1.0)

    def test_low_power(self, small_config):
        assert is_low_power(small_config)
        assert not is_low_power(ExperimentConfig())
