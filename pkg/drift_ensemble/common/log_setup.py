import logging

import sentry_sdk

from drift_ensemble.common.config import Config

LOG_FORMAT = '%(asctime)s.%(msecs)03d %(levelname)s %(module)s - %(funcName)s: %(message)s'
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def init_sentry():
    if Config.SENTRY_ENDPOINT is not None:
        sentry_sdk.init(Config.SENTRY_ENDPOINT)


def init_logging(level=None):
    if level is None:
        level = Config.LOG_LEVEL
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)

    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    # numpy/scipy warnings go through the warnings module; route them to the log too
    logging.captureWarnings(True)
