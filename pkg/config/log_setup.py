import logging

from .settings import LOG_LEVEL

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure the root logger once for command-line runs."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)
