import inspect
import json
import math

import numpy as np
import pytest

from metaphase import scenario
from metaphase import symplectic_core as sc
from metaphase.errors import ConfigError, NotSymplectic


def load_toml(content: str) -> scenario.ScenarioConfig:
    return scenario.loads(inspect.cleandoc(content), "toml")


HARMONIC = """
    schema = "1.0"
    hbar = 1.0
    outputs = ["phase", "cz"]

    [hamiltonian.harmonic]
    omega = 2.0

    [state]
    covariance = [[0.5, 0.0], [0.0, 0.5]]

    [grid]
    t_max = 2.0
    steps = 4
"""


def test_harmonic_toml():
    config = load_toml(HARMONIC)
    assert str(config.schema) == "1.0"
    assert config.n == 1
    assert config.hamiltonian.kind == "harmonic"
    assert config.hamiltonian.omega == 2.0
    assert np.allclose(config.hamiltonian.K, 2.0 * np.eye(2))
    assert config.outputs == ("phase", "cz")
    assert config.drive is None
    assert config.oracle == scenario.OracleSpec()
    assert np.allclose(config.grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])

    path = config.path()
    assert np.allclose(path.endpoint, sc.rotation(4.0))


def test_constant_k_json():
    content = json.dumps(
        {
            "schema": "1.2",
            "hbar": 0.5,
            "hamiltonian": {"constant_K": [[2.0, 0.3], [0.3, 1.0]]},
            "state": {"thermal": {"nbar": 0.4}, "mean": [0.1, 0.0]},
            "grid": {"t_max": 1.0, "steps": 10},
            "outputs": ["phase", "oracle", "oracle"],
            "oracle": {"cutoff": 30, "tol": 1e-7},
        }
    )
    config = scenario.loads(content)
    assert config.hbar == 0.5
    assert config.state.hbar == 0.5
    assert np.allclose(config.state.V, 0.45 * np.eye(2))
    assert np.allclose(config.state.mean, [0.1, 0.0])
    assert config.outputs == ("phase", "oracle")
    assert config.oracle == scenario.OracleSpec(30, 1e-7)
    assert config.path().endpoint.shape == (2, 2)


def test_normal_modes():
    config = load_toml(
        """
        schema = "1.0"

        [hamiltonian.normal_modes]
        omegas = [1.0, 2.0]

        [state.thermal]
        omegas = [1.0, 2.0]
        beta = 2.0

        [grid]
        t_max = 1.0
        steps = 10
    """
    )
    assert config.n == 2
    assert np.allclose(config.hamiltonian.K, np.diag([1.0, 2.0, 1.0, 2.0]))


def test_normal_modes_rejects_non_symplectic_r():
    with pytest.raises(NotSymplectic):
        load_toml(
            """
            schema = "1.0"

            [hamiltonian.normal_modes]
            omegas = [1.0]
            R = [[2.0, 0.0], [0.0, 2.0]]

            [state]
            covariance = [[0.5, 0.0], [0.0, 0.5]]

            [grid]
            t_max = 1.0
            steps = 10
        """
        )


def test_exponential_hamiltonian():
    config = load_toml(
        """
        schema = "1.0"

        [hamiltonian.exponential]
        X = [[0.0, 1.0], [-1.0, 0.0]]

        [state.squeezed]
        X = [[2.0]]

        [grid]
        t_max = 1.0
        steps = 10
    """
    )
    assert np.allclose(config.hamiltonian.K, np.eye(2))
    assert np.allclose(config.path().endpoint, sc.rotation(1.0))


def test_drive_force():
    config = load_toml(
        HARMONIC
        + """
        [drive]
        force = [0.1, 0.0]
    """
    )
    affine = config.drive.affine(config.path())
    assert affine.z_t.shape == (5, 2)
    assert np.allclose(affine.z_t[0], 0.0)


def test_sampled_drive_needs_every_sample():
    base = inspect.cleandoc(HARMONIC)
    with pytest.raises(ConfigError, match="one entry per grid sample"):
        scenario.loads(
            base + "\n[drive]\nz_t = [[0.0, 0.0]]\ngamma_t = [0.0]\n", "toml"
        )
    with pytest.raises(ConfigError, match="either force"):
        scenario.loads(base + "\n[drive]\nforce = [0.0, 0.0]\ngamma_t = [0.0]\n", "toml")


@pytest.mark.parametrize(
    "extra, message",
    [
        ("colour = 1", "unknown key"),
        ('outputs = ["phase", "movie"]', "unknown output"),
    ],
)
def test_unknown_keys(extra, message):
    content = extra + "\n" + inspect.cleandoc(HARMONIC).replace('outputs = ["phase", "cz"]\n', "")
    with pytest.raises(ConfigError, match=message):
        scenario.loads(content, "toml")


@pytest.mark.parametrize(
    "old, new",
    [
        ('schema = "1.0"', 'schema = "2.0"'),
        ('schema = "1.0"', 'schema = "one"'),
        ("steps = 4", "steps = 1"),
        ("omega = 2.0", "omega = -2.0"),
        ("hbar = 1.0", "hbar = true"),
        ("[[0.5, 0.0], [0.0, 0.5]]", "[0.5, 0.5]"),
        ("[[0.5, 0.0], [0.0, 0.5]]", "[[0.5, 0.1], [0.0, 0.5]]"),
        ("[hamiltonian.harmonic]\nomega = 2.0", "[hamiltonian]\nconstant_K = [[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]"),
    ],
)
def test_bad_values(old, new):
    content = inspect.cleandoc(HARMONIC)
    assert old in content
    with pytest.raises(ConfigError):
        scenario.loads(content.replace(old, new), "toml")


def test_missing_sections():
    with pytest.raises(ConfigError, match="missing required scenario.grid"):
        scenario.loads(json.dumps({"schema": "1.0", "hamiltonian": {"harmonic": {"omega": 1.0}}}))
    with pytest.raises(ConfigError, match="exactly one of"):
        scenario.loads(
            json.dumps(
                {
                    "schema": "1.0",
                    "hamiltonian": {"harmonic": {"omega": 1.0}, "constant_K": [[1.0, 0.0], [0.0, 1.0]]},
                    "state": {"covariance": [[0.5, 0.0], [0.0, 0.5]]},
                    "grid": {"t_max": 1.0, "steps": 2},
                }
            )
        )


def test_state_hbar_must_agree():
    content = inspect.cleandoc(HARMONIC) + "\n"
    with pytest.raises(ConfigError, match="differs"):
        scenario.loads(content.replace("[state]\n", "[state]\nhbar = 2.0\n"), "toml")


def test_syntax_errors():
    with pytest.raises(ConfigError):
        scenario.loads("schema = ", "toml")
    with pytest.raises(ConfigError):
        scenario.loads("{", "json")
    with pytest.raises(ConfigError):
        scenario.loads("", "yaml")


def test_default_scenario(tmp_path):
    path = tmp_path / "scenario.toml"
    scenario.write_default_scenario(path)

    text = path.read_text()
    assert text.startswith("# Scenario for metaphase")

    config = scenario.load(path)
    assert config.hamiltonian.kind == "harmonic"
    assert config.grid.steps == 200
    assert config.grid.t_max == pytest.approx(3 * math.pi)
    assert config.outputs == ("phase", "cz")
    assert config.state.is_centered
    assert config.oracle.cutoff == 60


def test_load_json_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "schema": "1.0",
                "hamiltonian": {"harmonic": {"omega": 1.0, "modes": 2}},
                "state": {"thermal": {"nbar": [0.1, 0.2]}},
                "grid": {"t_max": 1.0, "steps": 2},
            }
        )
    )
    config = scenario.load(path)
    assert config.n == 2

    path.write_text("{ not json")
    with pytest.raises(ConfigError, match="run.json"):
        scenario.load(path)


def test_load_existing_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        scenario.load(tmp_path / "missing.toml")
    with pytest.raises(ConfigError, match="does not exist"):
        scenario.load_existing(tmp_path / "missing.toml")
