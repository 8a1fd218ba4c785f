"""
Logging service for the toolkit
Handles application logs and the optional JSON-lines audit log
"""

import os
import sys
import logging
import datetime
import uuid
import json

from src.config import settings

# Create logger
logger = logging.getLogger(settings.LOGGER_NAME)
logger.setLevel(logging.DEBUG)
logger.propagate = False

# Create formatters
app_formatter = logging.Formatter(settings.LOG_FORMAT)
audit_formatter = logging.Formatter(settings.AUDIT_FORMAT)

# Console handler on stderr; stdout carries command output
console_handler = logging.StreamHandler(sys.stderr)
console_handler.setLevel(getattr(logging, settings.LOG_LEVEL))
console_handler.setFormatter(app_formatter)
logger.addHandler(console_handler)

# Audit log path, set by configure_file_logging
_audit_log_file = None


def set_console_level(level):
    """Change the console verbosity (e.g. logging.INFO for --verbose)."""
    console_handler.setLevel(level)


def configure_file_logging(log_dir):
    """
    Attach a file handler and enable the audit log under log_dir

    Args:
        log_dir: Directory receiving meixner.log and audit.log

    Returns:
        Path of the audit log file
    """
    global _audit_log_file
    os.makedirs(log_dir, exist_ok=True)

    app_log_file = os.path.join(log_dir, settings.APP_LOG_NAME)
    if not any(isinstance(h, logging.FileHandler) and h.baseFilename == os.path.abspath(app_log_file)
               for h in logger.handlers):
        app_handler = logging.FileHandler(app_log_file)
        app_handler.setLevel(logging.INFO)
        app_handler.setFormatter(app_formatter)
        logger.addHandler(app_handler)

    _audit_log_file = os.path.join(log_dir, settings.AUDIT_LOG_NAME)
    return _audit_log_file


def generate_audit_id():
    """Generate a unique ID for audit records"""
    return uuid.uuid4().hex[:12]


def log_audit_event(event_type, details):
    """
    Log an audit event as one JSON line

    Args:
        event_type: Type of event (e.g., "CLI_RUN", "VERIFY_COMPLETE", "SAMPLES_WRITTEN")
        details: Dictionary containing event details

    Returns:
        Audit ID for reference
    """
    audit_id = generate_audit_id()

    audit_entry = {
        "audit_id": audit_id,
        "timestamp": datetime.datetime.now().isoformat(),
        "event_type": event_type,
        "details": details
    }

    if _audit_log_file is not None:
        with open(_audit_log_file, "a") as audit_file:
            audit_file.write(json.dumps(audit_entry, default=str) + "\n")

    logger.debug(f"Audit event: {event_type} (audit_id: {audit_id})")

    return audit_id
