# -*- coding: utf-8 -*-
import logging
import os
import sys
import warnings

ENV_VAR = 'CARDIOQUANT_LOG'
LEVELS = {'off': None, 'info': logging.INFO, 'debug': logging.DEBUG}


def configure_logging(environ=None, stream=None):
    """
        Configures the ``cardioquant`` logger from the CARDIOQUANT_LOG
        environment variable (off|info|debug). Diagnostics go to standard
        error. Calling it twice replaces the previous handler.

        :return: the effective level token
    """
    environ = os.environ if environ is None else environ
    token = environ.get(ENV_VAR, 'off').strip().lower() or 'off'
    if token not in LEVELS:
        warnings.warn("unknown {0} value '{1}', logging disabled".format(
            ENV_VAR, token))
        token = 'off'

    logger = logging.getLogger('cardioquant')
    for handler in list(logger.handlers):
        if getattr(handler, '_cardioquant', False):
            logger.removeHandler(handler)

    level = LEVELS[token]
    if level is None:
        logger.setLevel(logging.CRITICAL + 1)
        logger.propagate = False
        return token

    handler = logging.StreamHandler(stream or sys.stderr)
    handler._cardioquant = True
    handler.setFormatter(logging.Formatter(
        '%(asctime)s %(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False
    return token
