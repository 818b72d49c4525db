"""JSON Lines log reading/writing.

Formats (one JSON object per line):

* detections -- ``{"t", "id", "class", "x", "y"}`` vehicle frame
* ego        -- ``{"t", "kind": "imu", "gyro": [3], "accel": [3]}``,
                ``{"t", "kind": "wheel", "speed"}``,
                ``{"t", "kind": "gps", "pos": [x, y], "sigma_pos"}``
* truth      -- ``{"t", "id", "x", "y"}`` world frame
* warnings   -- see :data:`WARNING_SCHEMA`
* tracks     -- ``{"t", "id", "x", "y"}`` analysis frame, as ingested
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterable, List, TypeVar, Union

import jsonschema

from .core import Detection
from .ego_state import EgoRecord, ego_record_from_dict

T = TypeVar("T")
PathLike = Union[str, Path]


class MalformedLogError(ValueError):
    pass


class TimestampRegressionError(ValueError):
    pass


WARNING_SCHEMA = {
    "type": "object",
    "required": ["t", "id", "class", "severity", "direction", "utterance", "t_veh", "s"],
    "additionalProperties": False,
    "properties": {
        "t": {"type": "number"},
        "id": {"type": "integer"},
        "class": {"enum": ["pedestrian", "bicycle", "vehicle"]},
        "severity": {"enum": ["early", "emergency"]},
        "direction": {"enum": ["left", "ahead", "right"]},
        "utterance": {"type": "string", "minLength": 1},
        "t_veh": {"type": "number", "minimum": 0},
        "s": {"type": "number", "minimum": 0},
    },
}


def validate_warning(record: dict) -> None:
    jsonschema.validate(record, WARNING_SCHEMA)


def dumps(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r) + "\n" for r in records)


def write_jsonl(path: PathLike, records: Iterable[dict]) -> None:
    Path(path).write_text(dumps(records))


def read_jsonl(path: PathLike, parse: Callable[[dict], T] = lambda d: d) -> List[T]:
    """Parse every non-blank line; errors name the offending line."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedLogError(f"{path}:{lineno}: {exc}") from exc
    return out


def check_time_order(records, what: str) -> None:
    prev = float("-inf")
    for i, r in enumerate(records):
        t = r.t if hasattr(r, "t") else r["t"]
        if t < prev:
            raise TimestampRegressionError(f"{what} record {i + 1}: t={t} after t={prev}")
        prev = t


def read_detections(path: PathLike) -> List[Detection]:
    return read_jsonl(path, Detection.from_dict)


def read_ego(path: PathLike) -> List[EgoRecord]:
    return read_jsonl(path, ego_record_from_dict)
