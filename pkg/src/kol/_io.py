"""Deterministic file output: atomic writes, stable bytes, no clocks.

Every artifact this package writes must be byte-identical across runs with
the same inputs, so nothing here consults the time, the hostname, or any
iteration order that is not already fixed.  JSON is emitted with sorted
keys; floats go through repr (shortest round-trip form).
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file + rename."""
    path = os.path.abspath(path)
    d = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-io-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Human-readable but byte-stable JSON (sorted keys, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def json_digest(obj) -> str:
    """sha256 over the compact canonical encoding of a JSON-able object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def sidecar_path(csv_path: str) -> str:
    """foo.csv -> foo.json (or foo.ext -> foo.ext.json for odd extensions)."""
    root, ext = os.path.splitext(csv_path)
    if ext.lower() == ".csv":
        return root + ".json"
    return csv_path + ".json"
