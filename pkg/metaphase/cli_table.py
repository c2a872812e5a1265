import argparse
import cmath
import fractions
import logging
import math
import pathlib
import typing

from . import phase_shift
from . import symplectic_core as sc
from .cz_index import cz_harmonic_closed
from .errors import OutOfRange
from .gaussian_state import coherent
from .tables import Table
from .utils import handle_cli_error, open_output

logger = logging.getLogger("table")

TABLE_COLUMNS = ["interval", "nu", "arg", "phase"]


class Branch(typing.NamedTuple):
    """``constant + slope * wt/2 (mod 2 pi)``"""

    constant: float
    slope: int

    def format(self) -> str:
        c = fractions.Fraction(self.constant / math.pi).limit_denominator(8)
        if c == 0:
            head = ""
        elif c == 1:
            head = "pi"
        else:
            head = f"{c}pi"
        if self.slope == 0:
            return head or "0"
        sign = "-" if self.slope < 0 else ("+ " if head else "")
        tail = "wt/2" if abs(self.slope) == 1 else f"{abs(self.slope)}wt/2"
        if head:
            return f"{head} {sign}{' ' if sign == '-' else ''}{tail}"
        return f"{sign}{tail}"


def _multiple(j: int) -> str:
    return {0: "0", 1: "pi"}.get(j, f"{j}pi")


def _wrap(x: float) -> float:
    return math.remainder(x, 2 * math.pi)


def _fit(omega: float, t1: float, t2: float, a1: float, a2: float) -> Branch:
    slope = round(_wrap(a2 - a1) / (omega * (t2 - t1) / 2))
    constant = (a1 - slope * omega * t1 / 2) % (2 * math.pi)
    if math.isclose(constant, 2 * math.pi, abs_tol=1e-9):
        constant = 0.0
    return Branch(constant, slope)


def harmonic_rows(omega: float, k_max: int) -> typing.List[typing.Dict[str, typing.Any]]:
    """
    Index, Fresnel argument and phase of the coherent-state trace on the
    half periods of the harmonic oscillator, fitted from two samples per
    interval
    """
    if k_max < 0:
        raise OutOfRange(f"k_max must be non-negative (got {k_max})")
    if not omega > 0:
        raise OutOfRange(f"omega must be positive (got {omega})")
    state = coherent()
    rows = []
    for j in range(2 * (k_max + 1)):
        lo, hi = j * math.pi / omega, (j + 1) * math.pi / omega
        t1, t2 = lo + (hi - lo) / 3, lo + 2 * (hi - lo) / 3

        nu = cz_harmonic_closed(omega, t1).nu
        phases, args = [], []
        for t in (t1, t2):
            trace = phase_shift.trace_gaussian(sc.rotation(omega * t), nu, state)
            phases.append(cmath.phase(trace))
            args.append(phases[-1] - nu * math.pi / 2)

        rows.append(
            {
                "interval": f"({_multiple(j)}, {_multiple(j + 1)})",
                "nu": nu,
                "arg": _fit(omega, t1, t2, *args).format(),
                "phase": _fit(omega, t1, t2, *phases).format(),
            }
        )
    return rows


def _write_text(rows, fp: typing.TextIO):
    header = {"interval": "wt in", "nu": "nu", "arg": "Arg(t)", "phase": "phi(t) mod 2pi"}
    widths = {c: max(len(str(r[c])) for r in [header, *rows]) for c in TABLE_COLUMNS}
    for r in [header, *rows]:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in TABLE_COLUMNS).rstrip(), file=fp)


class HarmonicTable:
    """
    Prints the phase table of the harmonic oscillator

    For each half period of the coherent-state evolution, shows the index
    of the flow, the argument of the Fresnel factor and the phase of
    Tr(U_t rho), all computed from the trace formula.
    """

    def __init__(self, parser: argparse.ArgumentParser):
        parser.add_argument("--omega", type=float, default=1.0, help="Oscillator frequency")
        parser.add_argument("--k-max", type=int, default=1, help="Last period to tabulate")
        parser.add_argument(
            "--format",
            dest="fmt",
            choices=["text", "csv", "json"],
            default="text",
            help="Output format",
        )
        parser.add_argument(
            "--out",
            type=pathlib.Path,
            default=None,
            help="Write the table to this file instead of stdout",
        )

    @handle_cli_error
    def run(self, omega: float, k_max: int, fmt: str, out: typing.Optional[pathlib.Path]):
        rows = harmonic_rows(omega, k_max)
        with open_output(out) as fp:
            if fmt == "text":
                _write_text(rows, fp)
            else:
                Table(list(TABLE_COLUMNS), rows).write(fp, fmt)
