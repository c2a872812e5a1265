import argparse
import logging
import pathlib
import typing

from . import cz_index, scenario
from . import symplectic_core as sc
from .errors import IndexMismatch, NotFree, OutOfRange
from .isotopy import SympPath
from .tables import Table
from .utils import add_config_argument, add_output_arguments, handle_cli_error, open_output

logger = logging.getLogger("cz-index")

CZ_COLUMNS = ["t", "nu", "nu_mod4", "nu_mod2_argdet", "maslov", "mod4_free", "degenerate"]


def _maslov(path: SympPath) -> typing.Optional[cz_index.MaslovTrack]:
    try:
        return cz_index.maslov_track(path)
    except NotFree as e:
        logger.warning("no Maslov bookkeeping for this path: %s", e)
        return None


def index_table(
    path: SympPath, tol: float = sc.DEGENERACY_TOL
) -> typing.Tuple[Table, int]:
    """
    One row per grid sample with the index from every route that applies
    there. Returns the table and the number of samples where two routes
    disagree. Samples with |det(S - I)| below ``tol`` (relative) count as
    degenerate.
    """
    nus = cz_index.cz_track(path, tol=tol)
    track = _maslov(path)
    table = Table(list(CZ_COLUMNS))
    mismatches = 0

    for t, nu in zip(path.times, nus):
        S = path.at(t)
        degenerate = sc.is_degenerate(S, tol)
        argdet = None if degenerate else cz_index.cz_mod2_argdet(S, tol)

        maslov = mod4 = None
        if track is not None and t > 0 and not degenerate and sc.is_free(S):
            try:
                maslov = track(t)
            except NotFree:
                pass
            else:
                try:
                    W = sc.generating_function_from_matrix(S, maslov)
                except IndexMismatch as e:
                    logger.warning("t=%r: %s", t, e)
                    mismatches += 1
                else:
                    mod4 = cz_index.cz_mod4_free(W)

        if nu is not None:
            if argdet is not None and argdet != nu % 2:
                logger.warning("t=%r: nu=%d but det(S - I) gives parity %d", t, nu, argdet)
                mismatches += 1
            if mod4 is not None and mod4 != nu % 4:
                logger.warning("t=%r: nu=%d but the free route gives %d mod 4", t, nu, mod4)
                mismatches += 1

        table.rows.append(
            {
                "t": float(t),
                "nu": nu,
                "nu_mod4": None if nu is None else nu % 4,
                "nu_mod2_argdet": argdet,
                "maslov": maslov,
                "mod4_free": mod4,
                "degenerate": degenerate,
            }
        )

    return table, mismatches


class CzIndex:
    """
    Tabulates the Conley-Zehnder index along a scenario's path

    The crossing count is compared against the parity of det(S - I) and,
    where S_t is free, against the generating function route.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        add_config_argument(parser)
        add_output_arguments(parser)
        parser.add_argument(
            "--tol",
            type=float,
            default=sc.DEGENERACY_TOL,
            help="Relative bound on |det(S - I)| below which a sample is degenerate",
        )

    @handle_cli_error
    def run(
        self,
        config: pathlib.Path,
        fmt: str,
        out: typing.Optional[pathlib.Path],
        tol: float,
    ):
        if not tol >= 0:
            raise OutOfRange(f"tolerance must be non-negative (got {tol})")
        cfg = scenario.load_existing(config)
        table, mismatches = index_table(cfg.path(), tol)
        with open_output(out) as fp:
            table.write(fp, fmt)
        if mismatches:
            raise IndexMismatch(f"{mismatches} sample(s) where the index routes disagree")
