# nougat/schemas/base.py
"""
Base schemas for reports written by the CLI
"""

from datetime import datetime, timezone
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field


class ErrorReport(BaseModel):
    """
    Standard error report
    Written to stderr as one JSON line when a command fails
    """
    success: bool = False
    error: str
    error_code: str
    exit_code: int
    details: Optional[Dict[str, Any]] = None
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "success": False,
                "error": "Row 12: expected 2 numeric columns, got 1",
                "error_code": "CSV_PARSE_ERROR",
                "exit_code": 2,
                "details": {"row": 12},
                "timestamp": "2026-01-01T10:00:00Z",
            }
        }
    )
