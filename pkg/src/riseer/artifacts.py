"""Artifact store: versioned JSON documents plus a hashed build manifest.

A run stages everything in a scratch directory and swaps it in with a
rename, so a failed build never leaves a half-written store visible.
Content hashes skip the created_at stamp; a rerun over identical inputs
reproduces every hash bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from datetime import datetime, timezone
from pathlib import Path

from .schemas import ARTIFACT_KINDS, DETAILS_KIND, MANIFEST_KIND, validate_document

# "riseer.snapshots.v1" -> stored as snapshots.json under the name "snapshots"
KIND_BY_NAME = {kind.split(".")[1]: kind for kind in ARTIFACT_KINDS}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(obj) -> str:
    return "sha256:" + hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def _envelope(kind: str, dataset_id: str, created_at: str, payload: dict) -> dict:
    return {
        "kind": kind,
        "dataset_id": dataset_id,
        "created_at": created_at,
        "payload": payload,
    }


def _dump(path: Path, document: dict) -> None:
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class ArtifactStore:
    """Read side of a written store directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def exists(self) -> bool:
        return self.manifest_path.is_file()

    def manifest(self) -> dict:
        if not self.exists():
            raise FileNotFoundError(f"no artifact store at {self.root}")
        return _load(self.manifest_path)

    def document(self, name: str) -> dict:
        if name not in KIND_BY_NAME:
            raise ValueError(f"unknown artifact name: {name!r}")
        path = self.root / f"{name}.json"
        if not path.is_file():
            raise FileNotFoundError(f"store at {self.root} is missing {name}.json")
        return _load(path)

    def payload(self, name: str) -> dict:
        return self.document(name)["payload"]

    def detail_ids(self) -> list[str]:
        details = self.root / "details"
        if not details.is_dir():
            return []
        return sorted(p.stem for p in details.glob("*.json"))

    def detail(self, cluster_id: str) -> dict:
        # ids come from URLs; refuse anything that could leave details/
        if not cluster_id or "/" in cluster_id or "\\" in cluster_id or cluster_id.startswith("."):
            raise KeyError(cluster_id)
        path = self.root / "details" / f"{cluster_id}.json"
        if not path.is_file():
            raise KeyError(cluster_id)
        return _load(path)["payload"]

    def validate_all(self) -> None:
        """Schema-check the manifest, every artifact, and every detail bundle."""
        validate_document(self.manifest())
        for name in KIND_BY_NAME:
            validate_document(self.document(name))
        for cid in self.detail_ids():
            validate_document(_load(self.root / "details" / f"{cid}.json"))


class StoreWriter:
    """Collects one run's artifacts, then writes the store in a single swap."""

    def __init__(self, dataset_id: str, config_dict: dict):
        self.dataset_id = dataset_id
        self.config_dict = config_dict
        self._payloads: dict[str, dict] = {}
        self._details: dict[str, dict] = {}

    def put(self, name: str, payload: dict) -> None:
        if name not in KIND_BY_NAME:
            raise ValueError(f"unknown artifact name: {name!r}")
        validate_document(_envelope(KIND_BY_NAME[name], self.dataset_id, "", payload))
        self._payloads[name] = payload

    def put_detail(self, cluster_id: str, payload: dict) -> None:
        validate_document(_envelope(DETAILS_KIND, self.dataset_id, "", payload))
        self._details[cluster_id] = payload

    def write(self, root: str | Path) -> ArtifactStore:
        missing = sorted(set(KIND_BY_NAME) - set(self._payloads))
        if missing:
            raise ValueError(f"store incomplete, missing artifacts: {missing}")
        root = Path(root)
        root.parent.mkdir(parents=True, exist_ok=True)
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        tmp = root.with_name(f"{root.name}.build-{os.getpid()}")
        if tmp.exists():
            shutil.rmtree(tmp)
        try:
            (tmp / "details").mkdir(parents=True)
            hashes = {}
            for name, payload in sorted(self._payloads.items()):
                kind = KIND_BY_NAME[name]
                _dump(tmp / f"{name}.json", _envelope(kind, self.dataset_id, stamp, payload))
                hashes[name] = content_hash(
                    {"kind": kind, "dataset_id": self.dataset_id, "payload": payload}
                )
            detail_hashes = {}
            for cid, payload in sorted(self._details.items()):
                _dump(
                    tmp / "details" / f"{cid}.json",
                    _envelope(DETAILS_KIND, self.dataset_id, stamp, payload),
                )
                detail_hashes[cid] = content_hash(
                    {"kind": DETAILS_KIND, "dataset_id": self.dataset_id, "payload": payload}
                )
            config_hash = content_hash(self.config_dict)
            manifest = {
                "kind": MANIFEST_KIND,
                "dataset_id": self.dataset_id,
                "created_at": stamp,
                "config": self.config_dict,
                "config_hash": config_hash,
                "artifacts": {
                    name: {"kind": KIND_BY_NAME[name], "path": f"{name}.json", "hash": h}
                    for name, h in hashes.items()
                },
                "detail_ids": sorted(detail_hashes),
                "store_hash": content_hash(
                    {"config": config_hash, "artifacts": hashes, "details": detail_hashes}
                ),
            }
            validate_document(manifest)
            _dump(tmp / "manifest.json", manifest)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        _swap(tmp, root)
        return ArtifactStore(root)


def write_single(out_dir: str | Path, name: str, dataset_id: str, payload: dict) -> Path:
    """One validated artifact on its own, for single-stage CLI runs."""
    if name not in KIND_BY_NAME:
        raise ValueError(f"unknown artifact name: {name!r}")
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    document = _envelope(KIND_BY_NAME[name], dataset_id, stamp, payload)
    validate_document(document)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.json"
    _dump(path, document)
    return path


def _swap(tmp: Path, root: Path) -> None:
    if root.exists():
        trash = root.with_name(f"{root.name}.old-{os.getpid()}")
        if trash.exists():
            shutil.rmtree(trash)
        os.replace(root, trash)
        os.replace(tmp, root)
        shutil.rmtree(trash)
    else:
        os.replace(tmp, root)
