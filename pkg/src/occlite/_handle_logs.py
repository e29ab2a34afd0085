import logging
from contextlib import contextmanager


@contextmanager
def _handle_logging_level(maximum_level=logging.WARNING):
    """Context manager to suppress any logging messages under specified level.
    Benchmark loops run inside it so that log I/O never lands in a timed
    region.

    Args:
        maximum_level: The highest logging level to be disabled. Default to
            logging.WARNING.
    """

    current_disable_level = logging.root.manager.disable
    logging.disable(maximum_level)

    try:
        yield
    finally:
        logging.disable(current_disable_level)


def configure_cli_logging(verbose: bool = False) -> None:
    """Configures the root logger for command-line runs. Library code never
    calls this.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
