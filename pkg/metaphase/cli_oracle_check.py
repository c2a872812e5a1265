import argparse
import logging
import pathlib
import typing

import numpy as np

from . import fock_oracle, scenario
from .cli_phase import oracle_traces, phase_records
from .errors import OracleDisagreement
from .gaussian_state import validate
from .isotopy import AffinePath
from .phase_shift import PhaseRecord
from .scenario import ScenarioConfig
from .tables import Table
from .utils import add_config_argument, add_output_arguments, handle_cli_error, open_output, parallel_map
from .weyl_symbol import (
    DisplacementElement,
    MetaplecticElement,
    displaced_twisted_symbol,
    twisted_symbol,
)

logger = logging.getLogger("oracle-check")

ORACLE_COLUMNS = [
    "t",
    "closed_re",
    "closed_im",
    "fock_re",
    "fock_im",
    "fock_residual",
    "quad_re",
    "quad_im",
    "quad_residual",
    "quad_error",
]


def _quadrature(
    config: ScenarioConfig,
    records: typing.Sequence[PhaseRecord],
    affine: typing.Optional[AffinePath],
    rows: typing.Sequence[int],
) -> typing.List[fock_oracle.QuadratureResult]:
    hbar = config.hbar
    path = affine.base if affine is not None else config.path()

    def one(i: int) -> fock_oracle.QuadratureResult:
        rec = records[i]
        elem = MetaplecticElement(path.at(rec.t), rec.nu)
        if affine is None:
            symbol = twisted_symbol(elem, hbar)
        else:
            d = DisplacementElement(affine.z_t[i], affine.gamma_t[i])
            symbol = displaced_twisted_symbol(d, elem, hbar)
        return fock_oracle.quadrature_trace(symbol, config.state)

    return parallel_map(one, rows)


def check_table(
    config: ScenarioConfig, stride: int = 1, quadrature: typing.Optional[bool] = None
) -> typing.Tuple[Table, float]:
    """
    Closed-form traces next to the Fock-space trace and, for one or two
    modes, the phase-space quadrature of the twisted symbol. Returns the
    table and the largest residual.
    """
    if quadrature is None:
        quadrature = config.n == 1

    records, affine = phase_records(config)
    fock = oracle_traces(config, records, affine)
    rows = [i for i in range(0, len(records), stride) if not records[i].degenerate]
    quad = _quadrature(config, records, affine, rows) if quadrature else [None] * len(rows)

    table = Table(list(ORACLE_COLUMNS))
    worst = 0.0
    for i, q in zip(rows, quad):
        rec = records[i]
        closed = rec.trace
        row = {
            "t": rec.t,
            "closed_re": float(closed.real),
            "closed_im": float(closed.imag),
            "fock_re": float(fock[i].real),
            "fock_im": float(fock[i].imag),
            "fock_residual": float(abs(closed - fock[i])),
        }
        worst = max(worst, row["fock_residual"])
        if q is not None:
            row.update(
                quad_re=float(q.value.real),
                quad_im=float(q.value.imag),
                quad_residual=float(abs(closed - q.value)),
                quad_error=float(q.error),
            )
            worst = max(worst, row["quad_residual"])
        table.rows.append(row)

    return table, worst


class OracleCheck:
    """
    Compares the closed-form trace with independent numerical traces

    The Fock-space oracle is always run. The quadrature oracle runs by
    default for one mode and on request for two.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        add_config_argument(parser)
        add_output_arguments(parser)
        parser.add_argument(
            "--tol",
            type=float,
            default=None,
            help="Largest allowed residual (default: from the scenario)",
        )
        parser.add_argument(
            "--stride",
            type=int,
            default=1,
            help="Check every n-th grid sample",
        )
        parser.add_argument(
            "--quadrature",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="Run the phase-space quadrature oracle",
        )

    @handle_cli_error
    def run(
        self,
        config: pathlib.Path,
        fmt: str,
        out: typing.Optional[pathlib.Path],
        tol: typing.Optional[float],
        stride: int,
        quadrature: typing.Optional[bool],
    ):
        cfg = scenario.load_existing(config)
        validate(cfg.state).raise_if_inadmissible()
        table, worst = check_table(cfg, max(1, stride), quadrature)
        with open_output(out) as fp:
            table.write(fp, fmt)

        tol = cfg.oracle.tol if tol is None else tol
        logger.info("largest residual %.3e over %d samples", worst, len(table.rows))
        if not np.isfinite(worst) or worst > tol:
            raise OracleDisagreement(f"oracle residual {worst:.3e} exceeds tolerance {tol:.1e}", worst)
