import logging

logger = logging.getLogger(__name__)


class ShutdownSignal:
    flag = False


def handle_shutdown_signal(signum, frame):
    """Signal handler to set the shutdown flag."""
    logger.warning("Signal %s received. Finishing the current step and shutting down...", signum)
    ShutdownSignal.flag = True
