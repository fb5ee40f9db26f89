"""JSON-lines template store: one parameter header line, one record per code.

Records can carry their indices either as a JSON list or as the compact
bit-packed binary form (base64). Stores are deterministic byte-for-byte for
identical inputs, so re-running an enrolment is an idempotent operation.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DataError
from .hashing import HashedCode, HashParams, pack_indices, unpack_indices


@dataclass(frozen=True)
class TemplateRecord:
    """One enrolled protected template with its provenance labels."""

    subject_id: str
    sample_id: str
    code: HashedCode
    created: str = f"rankhash {__version__}"


def write_store(path, params: HashParams, records, binary: bool = False):
    """Write a params header line followed by one JSON line per record."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "params", "params": params.to_dict()},
                            sort_keys=True) + "\n")
        for rec in records:
            obj = {
                "type": "template",
                "subject_id": rec.subject_id,
                "sample_id": rec.sample_id,
                "params_fingerprint": rec.code.params_fingerprint,
                "created": rec.created,
            }
            if binary:
                obj["packed"] = base64.b64encode(
                    pack_indices(rec.code.indices, params.k)
                ).decode("ascii")
            else:
                obj["indices"] = rec.code.indices.tolist()
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def read_store(path) -> tuple[HashParams, list[TemplateRecord]]:
    """Load a store, checking each record's digest against the header params."""
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise DataError(f"{path}: empty template store")
    head = json.loads(lines[0])
    if head.get("type") != "params":
        raise DataError(f"{path}: first line must be the params header")
    params = HashParams.from_dict(head["params"])
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        if obj.get("type") != "template":
            raise DataError(f"{path}: line {lineno}: unexpected record type")
        if "packed" in obj:
            indices, k = unpack_indices(base64.b64decode(obj["packed"]))
            if k != params.k:
                raise DataError(f"{path}: line {lineno}: packed k={k} != params k={params.k}")
        else:
            indices = np.asarray(obj["indices"], dtype=np.int32)
        code = HashedCode(indices=indices, params_fingerprint=obj["params_fingerprint"])
        if code.params_fingerprint != params.fingerprint:
            raise DataError(
                f"{path}: line {lineno}: record fingerprint does not match the store params"
            )
        records.append(TemplateRecord(
            subject_id=str(obj["subject_id"]),
            sample_id=str(obj["sample_id"]),
            code=code,
            created=str(obj.get("created", "")),
        ))
    return params, records
