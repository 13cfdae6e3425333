from .api import create_app, event_to_dict
from .clock import Clock, RealClock, VirtualClock
from .core import (
    BadRequestError,
    ConflictError,
    DeviceStatus,
    ExpiredError,
    NotFoundError,
    Participant,
    ServerConfig,
    ServerError,
    StudyServer,
)
from .store import EventLog
from .surveys import INSTRUMENTS, SchemaError, validate_items
from .uploads import (
    ChecksumMismatchError,
    ChunkConflictError,
    IncompleteUploadError,
    UploadError,
    UploadSession,
)

__all__ = [
    "create_app",
    "event_to_dict",
    "Clock",
    "RealClock",
    "VirtualClock",
    "BadRequestError",
    "ConflictError",
    "DeviceStatus",
    "ExpiredError",
    "NotFoundError",
    "Participant",
    "ServerConfig",
    "ServerError",
    "StudyServer",
    "EventLog",
    "INSTRUMENTS",
    "SchemaError",
    "validate_items",
    "ChecksumMismatchError",
    "ChunkConflictError",
    "IncompleteUploadError",
    "UploadError",
    "UploadSession",
]
