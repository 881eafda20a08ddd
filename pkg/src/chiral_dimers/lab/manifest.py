from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .. import __version__


def sha256_file(path, chunk=1 << 20):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    mode: str
    seed: int | None
    version: str = __version__
    wall_time: float = 0.0
    outputs: dict = field(default_factory=dict)     # relative path -> sha256

    def add(self, path, root):
        self.outputs[os.path.relpath(path, root)] = sha256_file(path)

    def write(self, root):
        path = os.path.join(root, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def read(cls, root):
        with open(os.path.join(root, "manifest.json"), encoding="utf-8") as fh:
            return cls(**json.load(fh))
