import logging
import os

from config.config import Config

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def setup_logging(level=None, log_file=None):
    """
    Configure the root logger with a stream handler and an optional file handler.
    Calling it again replaces the handlers installed by a previous call.
    """
    level = (level or Config.LOG_LEVEL).upper()
    log_file = log_file if log_file is not None else Config.LOG_FILE
    formatter = logging.Formatter(LOG_FORMAT)

    root = logging.getLogger()
    root.setLevel(level)
    for handler in list(root.handlers):
        if getattr(handler, "_impairdetect", False):
            root.removeHandler(handler)
            handler.close()

    handlers = [logging.StreamHandler()]
    if log_file:
        directory = os.path.dirname(os.path.abspath(log_file))
        os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, "a", encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
        handler._impairdetect = True
        root.addHandler(handler)
    return root
