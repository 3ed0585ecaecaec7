from .settings import *
from .log_setup import configure_logging
