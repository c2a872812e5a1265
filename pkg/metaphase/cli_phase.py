import argparse
import logging
import pathlib
import typing

import numpy as np

from . import fock_oracle, phase_shift, scenario
from .errors import OracleDisagreement
from .gaussian_state import validate
from .isotopy import AffinePath, affine_extend
from .scenario import ScenarioConfig
from .tables import phase_table
from .utils import (
    add_config_argument,
    add_output_arguments,
    handle_cli_error,
    open_output,
    parallel_map,
)

logger = logging.getLogger("phase")


def _affine(config: ScenarioConfig, path) -> typing.Optional[AffinePath]:
    if config.drive is not None:
        return config.drive.affine(path)
    if not config.state.is_centered:
        samples = len(path.times)
        return affine_extend(path, np.zeros((samples, 2 * path.n)), np.zeros(samples))
    return None


def phase_records(config: ScenarioConfig) -> typing.Tuple[typing.List[phase_shift.PhaseRecord], typing.Optional[AffinePath]]:
    path = config.path()
    affine = _affine(config, path)
    if affine is None:
        return phase_shift.phase_series(path, config.state), None
    return phase_shift.affine_phase_series(affine, config.state), affine


def oracle_traces(
    config: ScenarioConfig,
    records: typing.Sequence[phase_shift.PhaseRecord],
    affine: typing.Optional[AffinePath],
) -> typing.List[typing.Optional[complex]]:
    """
    Fock-space traces at the non-degenerate samples. A force drive is
    propagated with the driven Hamiltonian itself; a sampled drive is
    applied as ``e^(i gamma/hbar) T(z_t)`` after the quadratic propagator.
    """
    hbar = config.hbar
    cutoff = config.oracle.cutoff
    force = config.drive.force if config.drive is not None else None
    propagator = fock_oracle.FockPropagator(config.hamiltonian.K, hbar, cutoff, force)
    rho = fock_oracle.gaussian_density_fock(config.state, cutoff)
    sampled = affine is not None and force is None

    def one(i: int) -> typing.Optional[complex]:
        rec = records[i]
        if rec.degenerate:
            return None
        U = propagator.at(rec.t)
        if sampled:
            T = fock_oracle.displacement_fock(affine.z_t[i], hbar, cutoff)
            U = T @ U
            return np.exp(1j * affine.gamma_t[i] / hbar) * fock_oracle.trace_oracle(U, rho)
        return fock_oracle.trace_oracle(U, rho)

    return parallel_map(one, range(len(records)))


def run(
    config: ScenarioConfig,
    out: typing.TextIO,
    fmt: str = "csv",
    tol: typing.Optional[float] = None,
) -> int:
    """
    Writes one row per grid sample for ``config``, with the extra columns
    its outputs ask for. Raises :class:`OracleDisagreement` after the table
    is written when an oracle residual exceeds the tolerance.
    """
    report = validate(config.state)
    report.raise_if_inadmissible()
    if "validate" in config.outputs:
        logger.info(
            "state admissible: smallest symplectic eigenvalue %r (hbar/2 = %r)",
            report.min_symplectic_eigenvalue,
            config.hbar / 2,
        )

    records, affine = phase_records(config)
    table = phase_table(records)

    if "cz" in config.outputs:
        table.add_column("nu", [rec.nu for rec in records])

    if "dynamical" in config.outputs:
        force = config.drive.force if config.drive is not None else None
        dynamical = phase_shift.dynamical_phase_series(config.path(), config.state, force=force)
        geometric = phase_shift.geometric_phase(records, dynamical)
        table.add_column("dynamical_phase", [float(d) for d in dynamical])
        table.add_column(
            "geometric_phase", [None if np.isnan(g) else float(g) for g in geometric]
        )

    worst = None
    if "oracle" in config.outputs:
        oracle = oracle_traces(config, records, affine)
        residuals = [
            None if o is None or rec.trace is None else float(abs(rec.trace - o))
            for rec, o in zip(records, oracle)
        ]
        table.add_column("oracle_re", [None if o is None else float(o.real) for o in oracle])
        table.add_column("oracle_im", [None if o is None else float(o.imag) for o in oracle])
        table.add_column("residual", residuals)
        present = [r for r in residuals if r is not None]
        worst = max(present) if present else None

    table.write(out, fmt)

    tol = config.oracle.tol if tol is None else tol
    if worst is not None:
        logger.info("largest oracle residual %.3e (tolerance %.1e)", worst, tol)
        if worst > tol:
            raise OracleDisagreement(
                f"oracle residual {worst:.3e} exceeds tolerance {tol:.1e}", worst
            )
    return 0


class Phase:
    """
    Computes the phase of Tr(U_t rho) along a scenario

    Writes one row per grid sample: the trace, its principal and unwrapped
    argument, the index of the flow and the determinant det(S_t - I).
    Degenerate samples are kept with empty trace fields.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        add_config_argument(parser)
        add_output_arguments(parser)
        parser.add_argument(
            "--tol",
            type=float,
            default=None,
            help="Oracle residual tolerance (default: from the scenario)",
        )

    @handle_cli_error
    def run(
        self,
        config: pathlib.Path,
        fmt: str,
        out: typing.Optional[pathlib.Path],
        tol: typing.Optional[float],
    ):
        cfg = scenario.load_existing(config)
        with open_output(out) as fp:
            return run(cfg, fp, fmt, tol)
