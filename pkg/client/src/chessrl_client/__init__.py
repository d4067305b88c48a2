"""Client SDK for the chessrl reward-scoring service."""

from .client import (
    ClientConfig,
    RetryPolicy,
    RewardClient,
    ScoreResult,
    canonical_items_bytes,
    reward_fn_adapter,
    validate_items,
)
from .errors import ClientError, SchemaError, ServiceError, TransportError

__version__ = "0.1.0"

__all__ = [
    "ClientConfig", "RetryPolicy", "RewardClient", "ScoreResult",
    "canonical_items_bytes", "reward_fn_adapter", "validate_items",
    "ClientError", "SchemaError", "ServiceError", "TransportError",
]
