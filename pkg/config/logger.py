import logging

ROOT_LOGGER_NAME = "deadwood"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_logger(name):
    """
    Returns a logger under the deadwood namespace.

    Parameters:
      name (str): Usually the calling module's __name__.

    Returns:
      logging.Logger: The child logger.
    """
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def configure_logging(level=logging.WARNING):
    """
    Installs one stream handler on the deadwood root logger. Calling it again only updates the level.

    Parameters:
      level (int): A logging level such as logging.INFO.
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    root.setLevel(level)
    return root
