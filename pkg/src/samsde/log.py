# SPDX-License-Identifier: Apache-2.0

# Standard
import logging.config

FORMAT = "%(levelname)s %(asctime)s %(name)s:%(lineno)d: %(message)s"

# third-party loggers held at WARNING below debug level 2
NOISY_LOGGERS = ("matplotlib", "PIL")


def _levels(log_level: str, debug_level: int) -> tuple[str, str, str]:
    """(root, samsde, noisy) levels; NOTSET inherits from root"""
    if log_level != "DEBUG":
        return log_level, "NOTSET", "WARNING"
    if debug_level >= 2:
        return "DEBUG", "NOTSET", "NOTSET"
    # -v: debug output of samsde only
    return "INFO", "DEBUG", "WARNING"


def configure_logging(
    *,
    log_level: str,
    debug_level: int = 0,
    fmt: str = FORMAT,
) -> None:
    """Route all records to stderr with ``fmt``, replacing earlier handlers"""
    root, own, noisy = _levels(log_level, debug_level)
    loggers = {"samsde": {"level": own}}
    loggers.update({name: {"level": noisy} for name in NOISY_LOGGERS})
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {"default": {"format": fmt}},
            "handlers": {
                "stderr": {"class": "logging.StreamHandler", "formatter": "default"}
            },
            "root": {"level": root, "handlers": ["stderr"]},
            "loggers": loggers,
        }
    )
