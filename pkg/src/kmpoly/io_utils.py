"""Atomic file writes and run manifests."""

from __future__ import annotations

import json
import os
import platform
import tempfile
import time


def atomic_write(path, text):
    """Write text to path via a temp file + rename; never leaves partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload):
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_manifest(command, config, seed, started, outputs):
    """Everything needed to bit-reproduce a run."""
    import kmpoly

    return {
        "command": command,
        "config": config,
        "seed": seed,
        "started_unix": started,
        "wall_clock_s": time.time() - started,
        "outputs": outputs,
        "versions": {
            "kmpoly": kmpoly.__version__,
            "python": platform.python_version(),
        },
    }
