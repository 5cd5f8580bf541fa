# python
from typing import Any

# project
from app.core.errors import TrajThermoError

# 3rd party
from fastapi import HTTPException


def handle_endpoint_error(exc: Exception, logger: Any, message: str, **kwargs: Any) -> None:
    """Re-raise ``exc`` as an ``HTTPException``.

    Library errors (bad parameters, rejected configs, broken invariants) become 422 with
    their own text; anything else is logged with a traceback and becomes 500 with ``message``.
    """
    if isinstance(exc, HTTPException):
        raise exc

    context = {"error": str(exc), "error_type": type(exc).__name__, **kwargs}
    if isinstance(exc, TrajThermoError):
        logger.warning(message, **context)
        raise HTTPException(status_code=422, detail=str(exc)) from exc

    logger.error(message, exc_info=True, **context)
    raise HTTPException(status_code=500, detail=message) from exc
