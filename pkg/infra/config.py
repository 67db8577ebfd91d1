import os

import yaml
from dotenv import load_dotenv

from infra.errors import ValidationError, IoFailure

# Load environment variables
load_dotenv()

WIKIPEDIA_REST_URL = os.getenv("SHAPEFORGE_WIKIPEDIA_REST", "https://en.wikipedia.org/api/rest_v1")
WIKIPEDIA_API_URL = os.getenv("SHAPEFORGE_WIKIPEDIA_API", "https://en.wikipedia.org/w/api.php")
DBPEDIA_URL = os.getenv("SHAPEFORGE_DBPEDIA_URL", "https://dbpedia.org")
DBPEDIA_LOOKUP_URL = os.getenv("SHAPEFORGE_DBPEDIA_LOOKUP", "https://lookup.dbpedia.org/api/search")
USER_AGENT = os.getenv("SHAPEFORGE_USER_AGENT", "shapeforge/1.0 (dataset construction toolkit)")
CACHE_DIR = os.getenv("SHAPEFORGE_CACHE_DIR", ".shapeforge-cache")
LOG_LEVEL = os.getenv("SHAPEFORGE_LOG_LEVEL", "INFO")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{name} must be a number, got {raw!r}")


RATE_LIMIT = _env_float("SHAPEFORGE_RATE_LIMIT", 1.0)


def load_run_config(path: str | None) -> dict:
    """Read a flat YAML run configuration. Only ``prefixes`` may be a nested mapping."""
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise IoFailure(f"Cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ValidationError(f"Config file {path} is not valid YAML: {e}")

    if not isinstance(data, dict):
        raise ValidationError(f"Config file {path} must hold a key-value mapping")

    for key, value in data.items():
        if key == "prefixes":
            if not isinstance(value, dict):
                raise ValidationError("'prefixes' must map prefix names to namespace IRIs")
            continue
        if isinstance(value, (dict, list)):
            raise ValidationError(f"Config key '{key}' must be a scalar value")
    return data


def merge_settings(config: dict, flags: dict) -> dict:
    """Flags win over the config file; unset flags (None) fall through."""
    merged = dict(config)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged
