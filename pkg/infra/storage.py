import os
import json
import tempfile
from typing import Iterable, Iterator

from infra.errors import IoFailure


def atomic_write_text(path: str, text: str) -> None:
    """Write-temp-then-rename so readers never see a half-written file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise IoFailure(f"Could not write {path}: {e}")


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def write_jsonl(path: str, records: Iterable[dict]) -> int:
    lines = [dumps_record(r) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def write_json(path: str, data) -> None:
    atomic_write_text(path, json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def read_jsonl(path: str) -> Iterator[dict]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise IoFailure(f"{path}:{line_no}: invalid JSON ({e})")
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}")


def read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}")
