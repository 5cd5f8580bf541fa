# python
import logging
import logging.handlers
import sys
from pathlib import Path

# 3rd party
import structlog
from structlog.stdlib import ProcessorFormatter
from structlog.types import EventDict, Processor

LOG_FILE_NAME = "trajthermo.log"


def add_app_name(
    logger: logging.Logger, method_name: str, event_dict: EventDict
) -> EventDict:
    event_dict["application"] = "trajthermo"
    return event_dict


def _shared_processors() -> list[Processor]:
    return [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        add_app_name,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]


def _json_file_handler(log_path: Path, chain: list[Processor]) -> logging.Handler:
    # rotated at midnight, a month of history
    handler = logging.handlers.TimedRotatingFileHandler(
        filename=log_path / LOG_FILE_NAME,
        when="midnight",
        backupCount=30,
        encoding="utf-8",
    )
    handler.setFormatter(
        ProcessorFormatter(processor=structlog.processors.JSONRenderer(), foreign_pre_chain=chain)
    )
    return handler


def _console_handler(chain: list[Processor]) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        ProcessorFormatter(processor=structlog.dev.ConsoleRenderer(colors=False), foreign_pre_chain=chain)
    )
    return handler


def setup_logging(log_dir: str = "logs", console: bool = False, level: str | int = "INFO") -> None:
    """Route structlog and stdlib logging to a rotating JSON file.

    Args:
        log_dir: Directory for ``trajthermo.log`` and its rotations
        console: Also render events to stderr (the CLI's ``--verbose``)
        level: Root level name or number; unknown names raise ``ValueError``
    """
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)
    chain = _shared_processors()

    structlog.configure(
        processors=chain + [ProcessorFormatter.wrap_for_formatter],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    handlers = [_json_file_handler(log_path, chain)]
    if console:
        handlers.append(_console_handler(chain))

    root_logger = logging.getLogger()
    for old in root_logger.handlers:
        old.close()
    root_logger.handlers = handlers
    root_logger.setLevel(level.upper() if isinstance(level, str) else level)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)
