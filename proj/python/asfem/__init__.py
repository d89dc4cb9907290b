from ._core import CSV_COLUMNS, ConfigError, dorfler_mark, eoc
from . import _core


def study(**settings):
    """Run a convergence study in memory.

    Keywords are the command-line option names with underscores, e.g.
    ``study(case="case1", trial="P2P1", levels=3)``. Returns a dict with
    ``records`` (one dict per level, None where a column does not apply),
    ``completed`` and ``failure``.
    """
    return _core.study(settings)


def run(**settings):
    """Same as the ``run`` subcommand. Returns ``(exit_code, log)``."""
    return _core.run(settings)


__all__ = ["CSV_COLUMNS", "ConfigError", "dorfler_mark", "eoc", "run", "study"]
