"""
Security Alarms

Authentication failures POST a JSON event to an optional webhook.
"""

from typing import Dict, Optional

import httpx

from qkdlink.utils.logger import logger


async def send_security_alarm(webhook_url: Optional[str], event: Dict, timeout_s: float = 5.0) -> bool:
    """
    Deliver an alarm event

    Silent fail: delivery problems are logged and never interrupt the
    session teardown.

    Returns:
        True if the webhook accepted the event
    """
    if not webhook_url:
        return False
    try:
        async with httpx.AsyncClient() as client:
            response = await client.post(webhook_url, json=event, timeout=timeout_s)
            response.raise_for_status()
        return True
    except httpx.HTTPError as exc:
        logger.warning("security_alarm_undelivered", url=webhook_url, error=str(exc))
        return False
