import argparse
import logging
import pathlib
import typing

from . import scenario
from .gaussian_state import GaussianState, purity, symplectic_eigenvalues, validate
from .tables import Table
from .utils import add_config_argument, add_output_arguments, handle_cli_error, open_output

logger = logging.getLogger("validate-state")


def state_table(state: GaussianState) -> Table:
    report = validate(state)
    eigenvalues = symplectic_eigenvalues(state.V)
    table = Table(["mode", "symplectic_eigenvalue", "half_hbar", "admissible"])
    for j, w in enumerate(eigenvalues):
        table.rows.append(
            {
                "mode": j,
                "symplectic_eigenvalue": float(w),
                "half_hbar": state.hbar / 2,
                "admissible": bool(w >= state.hbar / 2 - report.tol),
            }
        )
    return table


class ValidateState:
    """
    Checks the scenario state against the uncertainty principle

    Lists the symplectic eigenvalues of the covariance matrix. An
    inadmissible state exits with status 3.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        add_config_argument(parser)
        add_output_arguments(parser)

    @handle_cli_error
    def run(self, config: pathlib.Path, fmt: str, out: typing.Optional[pathlib.Path]):
        state = scenario.load_existing(config).state
        report = validate(state)
        with open_output(out) as fp:
            state_table(state).write(fp, fmt)
        report.raise_if_inadmissible()
        logger.info(
            "admissible; smallest eigenvalue of V + i(hbar/2)J is %r, purity %r",
            report.min_eigenvalue,
            purity(state),
        )
