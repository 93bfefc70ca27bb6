from .apprentice import ApprenticeService, ApprenticeStatus
from .http import HttpError, JsonHttpService
from .manager import ApprenticeRecord, ManagerService

__all__ = [
    "ApprenticeRecord",
    "ApprenticeService",
    "ApprenticeStatus",
    "HttpError",
    "JsonHttpService",
    "ManagerService",
]
