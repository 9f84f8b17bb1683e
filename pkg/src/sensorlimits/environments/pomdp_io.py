"""Plain-text serialization of DiscretePOMDP models.

Schema (one ``key: values`` entry per line, ``#`` starts a comment)::

    format: sensorlimits-pomdp 1
    name: lava
    states: 5
    actions: 2
    observations: 5
    horizon: 5
    init: <S numbers>
    transition: <A*S*S numbers, index order [a][s][s']>
    sensor: <S*O numbers, index order [s][o]>
    reward: <S*A numbers, index order [s][a]>
    checksum: sha256:<hex>

The checksum is the SHA-256 of the preceding entries after normalization:
comments and blank lines dropped, each line stripped, runs of whitespace
collapsed to one space, joined with newlines.  The checksum line must be
last.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np

from .base import DiscretePOMDP

__all__ = ["load_pomdp", "save_pomdp", "dumps_pomdp", "loads_pomdp", "PomdpFormatError"]

FORMAT_TAG = "sensorlimits-pomdp 1"
_INT_KEYS = ("states", "actions", "observations", "horizon")
_ARRAY_KEYS = ("init", "transition", "sensor", "reward")
_REQUIRED = ("format",) + _INT_KEYS + _ARRAY_KEYS


class PomdpFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _normalize(line: str) -> str:
    return re.sub(r"\s+", " ", line.strip())


def _digest(lines) -> str:
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dumps_pomdp(model: DiscretePOMDP) -> str:
    body = [
        f"format: {FORMAT_TAG}",
        f"name: {model.name}",
        f"states: {model.n_states}",
        f"actions: {model.n_actions}",
        f"observations: {model.n_obs}",
        f"horizon: {model.horizon}",
        f"init: {_fmt(model.init)}",
        f"transition: {_fmt(model.transition)}",
        f"sensor: {_fmt(model.sensor)}",
        f"reward: {_fmt(model.reward)}",
    ]
    body = [_normalize(x) for x in body]
    return "\n".join(body + [f"checksum: sha256:{_digest(body)}"]) + "\n"


def save_pomdp(model: DiscretePOMDP, path) -> None:
    Path(path).write_text(dumps_pomdp(model), encoding="utf-8")


def loads_pomdp(text: str, verify_checksum: bool = True) -> DiscretePOMDP:
    entries: dict[str, tuple[str, int]] = {}
    normalized = []
    checksum = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if checksum is not None:
            raise PomdpFormatError("content after checksum line", lineno)
        if ":" not in line:
            raise PomdpFormatError("expected 'key: values'", lineno)
        key, value = (part.strip() for part in line.split(":", 1))
        if key == "checksum":
            checksum = (value, lineno)
            continue
        if key in entries:
            raise PomdpFormatError(f"duplicate key {key!r}", lineno)
        if key not in _REQUIRED and key != "name":
            raise PomdpFormatError(f"unknown key {key!r}", lineno)
        entries[key] = (value, lineno)
        normalized.append(_normalize(line))

    for key in _REQUIRED:
        if key not in entries:
            raise PomdpFormatError(f"missing required key {key!r}")
    if checksum is None:
        raise PomdpFormatError("missing checksum line")
    if verify_checksum:
        value, lineno = checksum
        if not value.startswith("sha256:"):
            raise PomdpFormatError("checksum must look like 'sha256:<hex>'", lineno)
        if value[len("sha256:"):].lower() != _digest(normalized):
            raise PomdpFormatError("checksum mismatch", lineno)

    value, lineno = entries["format"]
    if _normalize(value) != FORMAT_TAG:
        raise PomdpFormatError(f"unsupported format {value!r}", lineno)

    dims = {}
    for key in _INT_KEYS:
        value, lineno = entries[key]
        try:
            dims[key] = int(value)
        except ValueError:
            raise PomdpFormatError(f"{key} must be an integer", lineno) from None
        if dims[key] < 1:
            raise PomdpFormatError(f"{key} must be positive", lineno)

    s, a, o = dims["states"], dims["actions"], dims["observations"]
    shapes = {"init": (s,), "transition": (a, s, s), "sensor": (s, o), "reward": (s, a)}
    arrays = {}
    for key in _ARRAY_KEYS:
        value, lineno = entries[key]
        try:
            flat = np.array([float(tok) for tok in value.split()])
        except ValueError:
            raise PomdpFormatError(f"{key} contains a non-numeric token", lineno) from None
        expected = int(np.prod(shapes[key]))
        if flat.size != expected:
            raise PomdpFormatError(f"{key} needs {expected} values, found {flat.size}", lineno)
        arrays[key] = flat.reshape(shapes[key])

    name = entries.get("name", ("pomdp", 0))[0] or "pomdp"
    try:
        return DiscretePOMDP(arrays["transition"], arrays["sensor"], arrays["reward"], arrays["init"],
                             dims["horizon"], name=name)
    except ValueError as exc:
        raise PomdpFormatError(f"invalid model: {exc}") from exc


def load_pomdp(path, verify_checksum: bool = True) -> DiscretePOMDP:
    return loads_pomdp(Path(path).read_text(encoding="utf-8"), verify_checksum=verify_checksum)
