"""Byte-stable CSV/JSON writers and the run manifest."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__


def fmt(v) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Writer:
    """Writes files into ``out`` and remembers their hashes for the manifest."""

    def __init__(self, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = {}

    def text(self, name, content: str):
        p = self.out / name
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        self.files[name] = sha256(p)
        return p

    def csv(self, name, header, rows):
        return self.text(name, csv_text(header, rows))

    def json(self, name, obj):
        return self.text(name, json.dumps(obj, sort_keys=True, indent=2) + "\n")

    def manifest(self, command, config, seed, seed_derivation, stats, wall_clock):
        """``manifest.json`` itself is not hashed: it carries the wall-clock time."""
        m = {
            "tool": "agenet",
            "version": __version__,
            "command": command,
            "seed": seed,
            "seed_derivation": seed_derivation,
            "config": config,
            "outputs": dict(sorted(self.files.items())),
            "stats": stats,
            "wall_clock_seconds": wall_clock,
        }
        p = self.out / "manifest.json"
        tmp = p.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(m, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, p)
        return p


SIMULATE_SEEDS = (
    "np.random.SeedSequence(seed).spawn(4) -> generators for "
    "(initial ages, initial activity, delays, thinning proposals)"
)
CHAOS_SEEDS = (
    "replica (N, r): seed = SeedSequence(master, spawn_key=(N, r)).generate_state(1, uint64)[0], "
    "then SeedSequence(seed).spawn(5) -> (initial ages, initial activity, delays, thinning, mean-field sample); "
    "random M0 pinned once from SeedSequence(master, spawn_key=(2**32-1,))"
)
