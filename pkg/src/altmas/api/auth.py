"""Authentication utilities for the report server."""

from typing import Optional

from fastapi import Header, HTTPException

from .. import config


def verify_api_key(
    x_api_key: Optional[str] = Header(None, description="API Key for authentication")
):
    """Authentication dependency; the server is open when no key is configured."""
    if config.API_KEY is None:
        return None
    if x_api_key != config.API_KEY:
        raise HTTPException(status_code=401, detail="Invalid API key")
    return x_api_key
