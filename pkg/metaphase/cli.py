import argparse
import importlib
import inspect
import logging
import sys
import typing

from . import __version__

logger = logging.getLogger("metaphase")

#: used when the package metadata (and its entry points) is not installed
_BUILTIN_SUBCOMMANDS = [
    ("cz-index", "metaphase.cli_cz_index:CzIndex"),
    ("init", "metaphase.cli_init:Init"),
    ("oracle-check", "metaphase.cli_oracle_check:OracleCheck"),
    ("phase", "metaphase.cli_phase:Phase"),
    ("table", "metaphase.cli_table:HarmonicTable"),
    ("validate-state", "metaphase.cli_validate_state:ValidateState"),
]


def _resolve(target: str):
    module_name, _, attr = target.partition(":")
    return getattr(importlib.import_module(module_name), attr)


def _subcommands() -> typing.List[typing.Tuple[str, typing.Any]]:
    try:
        from importlib.metadata import entry_points

        found = entry_points(group="metaphase")
    except Exception:
        found = ()
    if found:
        return sorted((ep.name, ep.load()) for ep in found)
    return [(name, _resolve(target)) for name, target in _BUILTIN_SUBCOMMANDS]


def _add_subcommands(parser: argparse.ArgumentParser, commands, dest: str):
    subparsers = parser.add_subparsers(dest=dest, metavar="COMMAND")
    for name, cls in commands:
        doc = inspect.getdoc(cls) or ""
        sub = subparsers.add_parser(
            name,
            help=doc.split("\n", 1)[0],
            description=doc,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sub_commands = getattr(cls, "subcommands", None)
        if sub_commands:
            _add_subcommands(sub, sub_commands, dest + "_")
            sub.set_defaults(_cmd=None, _parser=sub)
        else:
            sub.set_defaults(_cmd=cls(sub), _parser=sub)


def _exit_status(result) -> int:
    if result is None or result is True:
        return 0
    if result is False:
        return 1
    return int(result)


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="metaphase",
        description="Phases of Gaussian states under quadratic quantum flows",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=False,
        help="Enable debug logging",
    )
    _add_subcommands(parser, _subcommands(), "command")

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)-8s: %(name)-16s: %(message)s",
    )

    cmd = getattr(args, "_cmd", None)
    if cmd is None:
        getattr(args, "_parser", parser).print_help()
        return 1

    params = inspect.signature(cmd.run).parameters
    kwargs = {k: v for k, v in vars(args).items() if k in params}
    return _exit_status(cmd.run(**kwargs))


def entry():
    sys.exit(main())
