"""CSV emission and run manifests.

CSV contract: comma separator, '.' decimal point, one header row, LF line
endings, floats in shortest round-trip form.  Every CSV the CLI writes ends
with a `manifest` column carrying the deterministic id of the manifest that
produced it, so outputs are traceable and reruns with identical config and
seed are byte-identical (manifest timestamps live only in the manifest file).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


@dataclass
class RunManifest:
    """Provenance record for one CLI invocation."""

    manifest_id: str
    command: str
    version: str
    master_seed: int
    config: dict
    config_text: str
    params: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    created: str = ""

    def save(self, path: Path) -> None:
        payload = asdict(self)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def manifest_id(command: str, version: str, master_seed: int, config: dict) -> str:
    blob = json.dumps(
        {"command": command, "version": version, "seed": master_seed, "config": config},
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def new_manifest(
    command: str,
    version: str,
    master_seed: int,
    config: dict,
    config_text: str,
) -> RunManifest:
    return RunManifest(
        manifest_id=manifest_id(command, version, master_seed, config),
        command=command,
        version=version,
        master_seed=master_seed,
        config=config,
        config_text=config_text,
        created=datetime.now(timezone.utc).isoformat(),
    )


def load_manifest(path: Path) -> RunManifest:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return RunManifest(**data)
