"""Typed error taxonomy mirroring the service's failure modes."""


class ClientError(Exception):
    """Base class for all client errors."""


class TransportError(ClientError):
    """Connection, DNS, or timeout failure that survived the retry budget."""


class SchemaError(ClientError):
    """Request rejected client-side, or a response that violates the schema."""


class ServiceError(ClientError):
    """Non-2xx HTTP response from the service."""

    def __init__(self, status_code: int, detail: str = ""):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail
