"""Line-delimited JSON traces shared by the interpreter and the runtime.

Every record carries at least {step, rule, tids, rho_ch}; rendezvous
records add chan_id and payload.  rho_ch lists, per thread/agent, the
channel halves it holds, written like "3+"/"3-"; the analyzer replays
those snapshots through the deadlock-freedom decision procedure.
"""

from __future__ import annotations

import json
from typing import IO, Iterable

REQUIRED_FIELDS = ("step", "rule", "tids", "rho_ch")
OPTIONAL_FIELDS = ("chan_id", "payload")


def validate_record(rec: dict) -> None:
    for f in REQUIRED_FIELDS:
        if f not in rec:
            raise ValueError(f"trace record missing field {f!r}: {rec!r}")
    if not isinstance(rec["rho_ch"], list) or not all(isinstance(g, list) for g in rec["rho_ch"]):
        raise ValueError(f"rho_ch must be a list of lists: {rec!r}")


def dump_record(rec: dict) -> str:
    validate_record(rec)
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def write_trace(records: Iterable[dict], fp: IO[str]) -> None:
    for rec in records:
        fp.write(dump_record(rec))
        fp.write("\n")


def save_trace(records: Iterable[dict], path: str) -> None:
    with open(path, "w") as fp:
        write_trace(records, fp)


def read_trace(fp: IO[str]) -> list[dict]:
    records = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        validate_record(rec)
        records.append(rec)
    return records


def load_trace(path: str) -> list[dict]:
    with open(path) as fp:
        return read_trace(fp)
