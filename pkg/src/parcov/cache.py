"""On-disk spectrum cache shared by the Gaussian-ensemble and kicked-rotor generators.

File layout::

    PRMT1\\n
    {json header}\\n
    little-endian float64 body, C order, shape given in the header

The header records the generator kind, beta, N, member count, the
parameter schedule (alpha or (K, dK) per record), the seed, the config hash
and the SHA-256 of the body.  A file whose hash or shape disagrees is
treated as corrupt: it is regenerated and overwritten with a warning.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import warnings
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"PRMT1\n"


class CacheCorruption(IOError):
    pass


def _jsonable(obj):
    if is_dataclass(obj):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def config_hash(obj):
    """SHA-256 of the canonical JSON form; stable under key reordering."""
    text = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_spectra(path, array, header):
    body = np.ascontiguousarray(array, dtype="<f8")
    head = dict(_jsonable(header))
    head["shape"] = list(body.shape)
    head["sha256"] = hashlib.sha256(body.tobytes()).hexdigest()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(head, sort_keys=True).encode() + b"\n")
        fh.write(body.tobytes())
    os.replace(tmp, path)
    return head


def read_spectra(path):
    """Return ``(array, header)``; raise CacheCorruption on any mismatch."""
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise CacheCorruption(f"{path}: bad magic")
        try:
            head = json.loads(fh.readline())
        except json.JSONDecodeError as exc:
            raise CacheCorruption(f"{path}: unreadable header") from exc
        raw = fh.read()
    shape = tuple(head.get("shape", ()))
    if len(raw) != 8 * int(np.prod(shape)):
        raise CacheCorruption(f"{path}: body length does not match shape {shape}")
    if hashlib.sha256(raw).hexdigest() != head.get("sha256"):
        raise CacheCorruption(f"{path}: checksum mismatch")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).copy(), head


def cached(cache_dir, kind, cfg, build, extra=None):
    """Load spectra for ``cfg`` from ``cache_dir`` or build and store them.

    ``build()`` returns the array; ``extra`` is merged into the header.
    With ``cache_dir=None`` nothing is read or written.
    """
    if cache_dir is None:
        return build()
    digest = config_hash({"kind": kind, "config": cfg})
    path = Path(cache_dir) / f"{kind}-{digest[:16]}.prmt"
    if path.exists():
        try:
            array, head = read_spectra(path)
            if head.get("config_hash") == digest:
                logger.info("cache hit %s", path)
                return array
            raise CacheCorruption(f"{path}: config hash mismatch")
        except CacheCorruption as exc:
            warnings.warn(f"{exc}; regenerating", stacklevel=2)
    array = build()
    header = {"kind": kind, "config_hash": digest, "config": cfg}
    header.update(extra or {})
    write_spectra(path, array, header)
    return array
