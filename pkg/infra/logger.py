import os
import socket
import time
import queue
import atexit
import threading
import logging
from collections import defaultdict
from datetime import datetime

import requests
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOKI_URL = os.getenv("LOKI_URL")
LOKI_USER_ID = os.getenv("LOKI_USER_ID")
LOKI_API_TOKEN = os.getenv("LOKI_API_TOKEN")
HOST_NAME = os.getenv("SHAPEFORGE_HOST", socket.gethostname())
SERVICE_NAME = os.getenv("SERVICE_NAME", "shapeforge")

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"

_internal_logger = logging.getLogger("shapeforge")

# Queue for background log pushing, only fed once configure() enabled Loki
log_queue = queue.Queue()
_exit_event = threading.Event()
_worker_thread = None
_command_label = "library"


def _loki_push_url() -> str:
    if not LOKI_URL:
        return ""
    return LOKI_URL.rstrip("/") + "/loki/api/v1/push"


def configure(level: str = "INFO", log_file: str | None = None, command: str | None = None) -> None:
    """Attach console + file handlers and start the Loki shipper when it is configured."""
    global _command_label

    log_file = log_file or os.getenv("SHAPEFORGE_LOG_FILE", "shapeforge.log")
    _command_label = command or _command_label

    _internal_logger.handlers.clear()
    _internal_logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    _internal_logger.propagate = False

    formatter = logging.Formatter(LOG_FORMAT)
    console = logging.StreamHandler()
    console.setFormatter(formatter)
    _internal_logger.addHandler(console)
    try:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        _internal_logger.addHandler(file_handler)
    except OSError as e:
        _internal_logger.warning(f"⚠️ Could not open log file {log_file}: {e}")

    if LOKI_URL and LOKI_USER_ID and LOKI_API_TOKEN:
        _start_worker()


def _start_worker() -> None:
    global _worker_thread
    if _worker_thread is not None:
        return
    _worker_thread = threading.Thread(target=_loki_worker, daemon=True)
    _worker_thread.start()
    atexit.register(_cleanup_logger)


def _loki_worker():
    while not _exit_event.is_set():
        # Wait up to 5 seconds to batch logs, or until exit is signaled
        _exit_event.wait(5.0)
        _drain_queue()
    _drain_queue()


def _drain_queue():
    batch = []
    while True:
        try:
            log_item = log_queue.get_nowait()
        except queue.Empty:
            break
        if log_item is not None:
            batch.append(log_item)
        log_queue.task_done()

    if not batch:
        return

    # Loki requires logs to be strictly in chronological order per stream
    batch.sort(key=lambda x: int(x[0]))
    chunk_size = 1000
    for i in range(0, len(batch), chunk_size):
        try:
            _push_batch_to_loki(batch[i:i + chunk_size])
        except Exception as e:
            _internal_logger.debug(f"Loki batch push error: {e}")


def _cleanup_logger():
    _exit_event.set()
    log_queue.put(None)
    if _worker_thread is not None:
        _worker_thread.join(timeout=5.0)


def _format_and_push(level: str, msg: str, *args):
    if args:
        try:
            formatted_msg = msg % args
        except Exception:
            formatted_msg = msg + " " + str(args)
    else:
        formatted_msg = str(msg)

    now = datetime.now()
    _internal_logger.log(getattr(logging, level), formatted_msg)

    if _worker_thread is not None and _internal_logger.isEnabledFor(getattr(logging, level)):
        timestamp_ns = str(int(now.timestamp() * 1e9))
        log_queue.put((timestamp_ns, level.lower(), formatted_msg))


def info(msg, *args, **kwargs):
    _format_and_push("INFO", msg, *args)


def warning(msg, *args, **kwargs):
    _format_and_push("WARNING", msg, *args)


def error(msg, *args, **kwargs):
    _format_and_push("ERROR", msg, *args)


def critical(msg, *args, **kwargs):
    _format_and_push("CRITICAL", msg, *args)


def debug(msg, *args, **kwargs):
    _format_and_push("DEBUG", msg, *args)


def _push_batch_to_loki(batch):
    """Pushes a batch of log lines to the Loki server, grouped by level."""
    push_url = _loki_push_url()
    if not push_url:
        return

    level_groups = defaultdict(list)
    level_last_ts = defaultdict(int)

    for timestamp_ns, level, log_line in batch:
        ts = int(timestamp_ns)
        # Timestamps must be strictly increasing per stream
        if ts <= level_last_ts[level]:
            ts = level_last_ts[level] + 1
        level_last_ts[level] = ts
        level_groups[level].append([str(ts), log_line.strip()])

    streams = []
    for level, values in level_groups.items():
        streams.append({
            "stream": {
                "service_name": SERVICE_NAME,
                "host": HOST_NAME,
                "level": level,
                "command": _command_label,
            },
            "values": values
        })

    try:
        response = requests.post(
            push_url,
            auth=(LOKI_USER_ID, LOKI_API_TOKEN),
            headers={"Content-type": "application/json"},
            json={"streams": streams},
            timeout=10
        )
        if response.status_code != 204:
            _internal_logger.debug(f"Loki push rejected: {response.status_code} {response.text}")
    except requests.RequestException as e:
        _internal_logger.debug(f"Loki connection error during batch push: {e}")


def elapsed(start: float) -> str:
    """Human readable duration since a time.monotonic() mark."""
    seconds = time.monotonic() - start
    if seconds < 60:
        return f"{seconds:.1f}s"
    return f"{int(seconds // 60)}m{int(seconds % 60):02d}s"
