"""HTTP ingestion service: storage, auth, and the FastAPI application."""

from .app import ServiceConfig, create_app
from .storage import DuplicateRecordError, RecordStore, StoreLockedError, StoredRecord

__all__ = [
    "ServiceConfig",
    "create_app",
    "RecordStore",
    "StoredRecord",
    "StoreLockedError",
    "DuplicateRecordError",
]
