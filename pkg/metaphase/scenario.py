import dataclasses
import json
import pathlib
import typing

import numpy as np
from packaging.version import InvalidVersion, Version
import tomli
import tomlkit

from . import symplectic_core as sc
from .errors import ConfigError, Error
from .gaussian_state import GaussianState, SqueezedSpec, squeezed_pure, thermal
from .isotopy import AffinePath, SympPath, affine_extend, driven_path, harmonic_path, normal_mode_path, one_parameter_group

#: schema versions with this major number are understood
SCHEMA_MAJOR = 1
SCHEMA_VERSION = "1.0"

OUTPUTS = ("phase", "cz", "validate", "oracle", "dynamical")

_TOP_KEYS = {"schema", "hbar", "hamiltonian", "drive", "state", "grid", "outputs", "oracle"}


@dataclasses.dataclass(frozen=True)
class GridSpec:
    t_max: float
    steps: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * (self.t_max / self.steps)


@dataclasses.dataclass(frozen=True)
class HamiltonianSpec:
    """
    Time independent quadratic Hamiltonian ``H = 1/2 K z.z``. ``kind`` names
    the variant the file used; the path keeps the matching closed form.
    """

    kind: str
    K: np.ndarray
    omega: typing.Optional[float] = None
    omegas: typing.Optional[np.ndarray] = None
    R: typing.Optional[np.ndarray] = None
    X: typing.Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.K.shape[0] // 2

    def path(self, times: typing.Sequence[float]) -> SympPath:
        if self.kind == "harmonic":
            return harmonic_path(self.omega, times, self.n)
        if self.kind == "normal_modes":
            return normal_mode_path(self.omegas, self.R, times)
        if self.kind == "exponential":
            return one_parameter_group(self.X, times)
        return one_parameter_group(sc.standard_form(self.n) @ self.K, times)


@dataclasses.dataclass(frozen=True)
class DriveSpec:
    force: typing.Optional[np.ndarray] = None
    z_t: typing.Optional[np.ndarray] = None
    gamma_t: typing.Optional[np.ndarray] = None

    def affine(self, base: SympPath) -> AffinePath:
        if self.force is not None:
            return driven_path(base, self.force)
        return affine_extend(base, self.z_t, self.gamma_t)


@dataclasses.dataclass(frozen=True)
class OracleSpec:
    cutoff: int = 60
    tol: float = 1e-6


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    schema: Version
    hbar: float
    hamiltonian: HamiltonianSpec
    state: GaussianState
    grid: GridSpec
    outputs: typing.Tuple[str, ...] = ("phase",)
    drive: typing.Optional[DriveSpec] = None
    oracle: OracleSpec = OracleSpec()

    @property
    def n(self) -> int:
        return self.hamiltonian.n

    def path(self) -> SympPath:
        return self.hamiltonian.path(self.grid.times)


def load(path: pathlib.Path) -> ScenarioConfig:
    """
    Reads a scenario from a ``.json`` or ``.toml`` file. Raises
    FileNotFoundError if the file isn't present.
    """
    path = pathlib.Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fp:
            try:
                data = tomli.load(fp)
            except tomli.TOMLDecodeError as e:
                raise ConfigError(f"{path}: {e}") from None
    else:
        with open(path) as fp:
            try:
                data = json.load(fp)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: {e}") from None
    return _load(str(path), data)


def loads(content: str, fmt: str = "json") -> ScenarioConfig:
    try:
        if fmt == "toml":
            data = tomli.loads(content)
        elif fmt == "json":
            data = json.loads(content)
        else:
            raise ConfigError(f"unknown scenario format {fmt!r}")
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"<string>: {e}") from None
    return _load("<string>", data)


def _table(where: str, key: str, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: {key} must be a table")
    return value


def _no_extra(where: str, section: str, data: dict, allowed: typing.Iterable[str]):
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) in {section}: {', '.join(extra)}")


def _require(where: str, section: str, data: dict, key: str):
    try:
        return data[key]
    except KeyError:
        raise ConfigError(f"{where} missing required {section}.{key}") from None


def _number(where: str, key: str, value, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{where}: {key} must be positive (got {value})")
    return value


def _array(where: str, key: str, value, ndim: int) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key} must be a numeric array") from None
    if arr.ndim != ndim:
        kind = "vector" if ndim == 1 else "matrix"
        raise ConfigError(f"{where}: {key} must be a {kind}")
    return arr


def _hamiltonian(where: str, data: dict) -> HamiltonianSpec:
    variants = {"harmonic", "constant_K", "normal_modes", "exponential"}
    _no_extra(where, "hamiltonian", data, variants)
    present = [k for k in variants if k in data]
    if len(present) != 1:
        raise ConfigError(
            f"{where}: hamiltonian must have exactly one of "
            f"{', '.join(sorted(variants))} (got {len(present)})"
        )
    kind = present[0]
    section = f"hamiltonian.{kind}"

    if kind == "constant_K":
        K = _array(where, section, data[kind], 2)
        if K.shape[0] != K.shape[1] or K.shape[0] % 2 or np.max(np.abs(K - K.T)) > 1e-12:
            raise ConfigError(f"{where}: {section} must be a symmetric 2n x 2n matrix")
        return HamiltonianSpec(kind, sc.sym(K))

    body = _table(where, section, data[kind])
    if kind == "harmonic":
        _no_extra(where, section, body, {"omega", "modes"})
        omega = _number(where, f"{section}.omega", _require(where, section, body, "omega"), True)
        modes = body.get("modes", 1)
        if isinstance(modes, bool) or not isinstance(modes, int) or modes < 1:
            raise ConfigError(f"{where}: {section}.modes must be a positive integer")
        return HamiltonianSpec(kind, omega * np.eye(2 * modes), omega=omega)

    if kind == "normal_modes":
        _no_extra(where, section, body, {"omegas", "R"})
        omegas = _array(where, f"{section}.omegas", _require(where, section, body, "omegas"), 1)
        if len(omegas) == 0 or np.any(omegas <= 0):
            raise ConfigError(f"{where}: {section}.omegas must be positive")
        n = len(omegas)
        R = np.eye(2 * n)
        if "R" in body:
            R = _array(where, f"{section}.R", body["R"], 2)
            if R.shape != (2 * n, 2 * n):
                raise ConfigError(f"{where}: {section}.R must be {2 * n}x{2 * n}")
        R = sc.check_symplectic(R, relative=True)
        D = np.diag(np.concatenate([omegas, omegas]))
        return HamiltonianSpec(kind, sc.sym(R.T @ D @ R), omegas=omegas, R=R)

    _no_extra(where, section, body, {"X"})
    X = _array(where, f"{section}.X", _require(where, section, body, "X"), 2)
    n = sc.mode_count(X)
    K = -sc.standard_form(n) @ X
    if np.max(np.abs(K - K.T)) > sc.SYMMETRY_TOL * max(1.0, np.max(np.abs(X))):
        raise ConfigError(f"{where}: {section}.X is not in the symplectic Lie algebra")
    return HamiltonianSpec(kind, sc.sym(K), X=X)


def _state(where: str, data: dict, hbar: float, n: int) -> GaussianState:
    _no_extra(where, "state", data, {"covariance", "squeezed", "thermal", "mean", "hbar"})
    if "hbar" in data and _number(where, "state.hbar", data["hbar"]) != hbar:
        raise ConfigError(f"{where}: state.hbar differs from hbar")

    variants = [k for k in ("covariance", "squeezed", "thermal") if k in data]
    if len(variants) != 1:
        raise ConfigError(f"{where}: state must have exactly one of covariance, squeezed, thermal")
    kind = variants[0]

    mean = None
    if "mean" in data:
        mean = _array(where, "state.mean", data["mean"], 1)
        if mean.shape != (2 * n,):
            raise ConfigError(f"{where}: state.mean must have {2 * n} components")

    if kind == "covariance":
        V = _array(where, "state.covariance", data[kind], 2)
        if V.shape != (2 * n, 2 * n):
            raise ConfigError(f"{where}: state.covariance must be {2 * n}x{2 * n}")
        return GaussianState(V, mean, hbar)

    body = _table(where, f"state.{kind}", data[kind])
    if kind == "squeezed":
        _no_extra(where, "state.squeezed", body, {"X", "Y"})
        X = np.atleast_2d(_array(where, "state.squeezed.X", _require(where, "state.squeezed", body, "X"), 2))
        Y = _array(where, "state.squeezed.Y", body["Y"], 2) if "Y" in body else None
        if X.shape != (n, n):
            raise ConfigError(f"{where}: state.squeezed.X must be {n}x{n}")
        return squeezed_pure(SqueezedSpec(X, Y), hbar, mean)

    _no_extra(where, "state.thermal", body, {"nbar", "omegas", "beta"})
    if "nbar" in body:
        raw = body["nbar"]
        nbar = _array(where, "state.thermal.nbar", raw if isinstance(raw, list) else [raw], 1)
        if nbar.shape != (n,):
            raise ConfigError(f"{where}: state.thermal.nbar must have {n} entries")
        try:
            return thermal(nbar=nbar, hbar=hbar, mean=mean)
        except ValueError as e:
            raise ConfigError(f"{where}: {e}") from None
    omegas = _array(where, "state.thermal.omegas", _require(where, "state.thermal", body, "omegas"), 1)
    beta = _number(where, "state.thermal.beta", _require(where, "state.thermal", body, "beta"), True)
    if omegas.shape != (n,):
        raise ConfigError(f"{where}: state.thermal.omegas must have {n} entries")
    try:
        return thermal(omegas=omegas, beta=beta, hbar=hbar, mean=mean)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


def _grid(where: str, data: dict) -> GridSpec:
    _no_extra(where, "grid", data, {"t_max", "steps"})
    t_max = _number(where, "grid.t_max", _require(where, "grid", data, "t_max"), True)
    steps = _require(where, "grid", data, "steps")
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 2:
        raise ConfigError(f"{where}: grid.steps must be an integer >= 2")
    return GridSpec(t_max, steps)


def _drive(where: str, data: dict, n: int, samples: int) -> DriveSpec:
    _no_extra(where, "drive", data, {"force", "z_t", "gamma_t"})
    if "force" in data:
        if "z_t" in data or "gamma_t" in data:
            raise ConfigError(f"{where}: drive takes either force or z_t/gamma_t")
        force = _array(where, "drive.force", data["force"], 1)
        if force.shape != (2 * n,):
            raise ConfigError(f"{where}: drive.force must have {2 * n} components")
        return DriveSpec(force=force)

    z_t = _array(where, "drive.z_t", _require(where, "drive", data, "z_t"), 2)
    gamma_t = _array(where, "drive.gamma_t", _require(where, "drive", data, "gamma_t"), 1)
    if z_t.shape != (samples, 2 * n) or gamma_t.shape != (samples,):
        raise ConfigError(f"{where}: drive.z_t and drive.gamma_t need one entry per grid sample ({samples})")
    return DriveSpec(z_t=z_t, gamma_t=gamma_t)


def _oracle(where: str, data: dict) -> OracleSpec:
    _no_extra(where, "oracle", data, {"cutoff", "tol"})
    spec = OracleSpec()
    cutoff = data.get("cutoff", spec.cutoff)
    if isinstance(cutoff, bool) or not isinstance(cutoff, int) or cutoff < 2:
        raise ConfigError(f"{where}: oracle.cutoff must be an integer >= 2")
    tol = _number(where, "oracle.tol", data.get("tol", spec.tol), True)
    return OracleSpec(cutoff, tol)


def _load(where: str, data: typing.Dict[str, typing.Any]) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must contain a table")
    _no_extra(where, "the scenario", data, _TOP_KEYS)

    try:
        schema = Version(str(_require(where, "scenario", data, "schema")))
    except InvalidVersion:
        raise ConfigError(f"{where}: schema is not a valid version") from None
    if schema.major != SCHEMA_MAJOR:
        raise ConfigError(
            f"Only scenario schema {SCHEMA_MAJOR}.x is supported ({where} has {schema})"
        )

    hbar = _number(where, "hbar", data.get("hbar", 1.0), True)
    hamiltonian = _hamiltonian(where, _table(where, "hamiltonian", _require(where, "scenario", data, "hamiltonian")))
    n = hamiltonian.n
    grid = _grid(where, _table(where, "grid", _require(where, "scenario", data, "grid")))

    outputs = data.get("outputs", ["phase"])
    if isinstance(outputs, str) or not isinstance(outputs, list):
        raise ConfigError(f"{where}: outputs must be a list")
    unknown = sorted(set(outputs) - set(OUTPUTS))
    if unknown:
        raise ConfigError(f"{where}: unknown output(s): {', '.join(unknown)}")

    drive = None
    if "drive" in data:
        drive = _drive(where, _table(where, "drive", data["drive"]), n, grid.steps + 1)
    oracle = _oracle(where, _table(where, "oracle", data.get("oracle", {})))

    state_data = _table(where, "state", _require(where, "scenario", data, "state"))
    try:
        state = _state(where, state_data, hbar, n)
    except ConfigError:
        raise
    except Error as e:
        raise ConfigError(f"{where}: state: {e}") from None

    return ScenarioConfig(
        schema=schema,
        hbar=hbar,
        hamiltonian=hamiltonian,
        state=state,
        grid=grid,
        outputs=tuple(dict.fromkeys(outputs)),
        drive=drive,
        oracle=oracle,
    )


def write_default_scenario(path: pathlib.Path):
    """
    Writes a commented TOML scenario for a harmonic oscillator started in the
    coherent state
    """
    doc = tomlkit.document()
    doc.add(tomlkit.comment("Scenario for metaphase: Tr(U_t rho) along a quadratic flow"))
    doc.add(tomlkit.nl())
    doc.add("schema", SCHEMA_VERSION)
    doc.add("hbar", 1.0)
    doc.add("outputs", ["phase", "cz"])

    hamiltonian = tomlkit.table()
    hamiltonian.add(tomlkit.comment("exactly one of: harmonic, constant_K, normal_modes, exponential"))
    harmonic = tomlkit.table()
    harmonic.add("omega", 1.0)
    harmonic.add("modes", 1)
    hamiltonian.add("harmonic", harmonic)
    doc.add("hamiltonian", hamiltonian)

    state = tomlkit.table()
    state.add(tomlkit.comment("covariance = [[...]] | squeezed = {X, Y} | thermal = {nbar} or {omegas, beta}"))
    state.add("covariance", [[0.5, 0.0], [0.0, 0.5]])
    state.add("mean", [0.0, 0.0])
    doc.add("state", state)

    grid = tomlkit.table()
    grid.add(tomlkit.comment("samples are t_i = i * t_max / steps"))
    grid.add("t_max", 9.42477796076938)
    grid.add("steps", 200)
    doc.add("grid", grid)

    oracle = tomlkit.table()
    oracle.add("cutoff", OracleSpec.cutoff)
    oracle.add("tol", OracleSpec.tol)
    doc.add("oracle", oracle)

    with open(path, "w") as fp:
        fp.write(tomlkit.dumps(doc))


def load_existing(path: pathlib.Path) -> ScenarioConfig:
    """:func:`load` for command line use; a missing file is a ConfigError"""
    try:
        return load(path)
    except FileNotFoundError:
        raise ConfigError(f"{path} does not exist") from None
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
