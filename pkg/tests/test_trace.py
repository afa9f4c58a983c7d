import io
import random

import pytest
from hypothesis import given, strategies as st

from mrsession.trace import dump_record, read_trace, write_trace, validate_record


def gen_record(rng: random.Random, step: int) -> dict:
    rules = ["init", "PR0", "PR1", "PR2", "PR3", "PR4-send", "PR4-recv",
             "PR4-skip", "PR4-close", "msg", "tag", "skip", "close", "spawn", "splice"]
    rec = {
        "step": step,
        "rule": rng.choice(rules),
        "tids": sorted(rng.sample(range(8), rng.randrange(1, 3))),
        "rho_ch": [
            sorted(f"{rng.randrange(1, 6)}{rng.choice('+-')}" for _ in range(rng.randrange(0, 3)))
            for _ in range(rng.randrange(1, 5))
        ],
    }
    if rng.random() < 0.5:
        rec["chan_id"] = rng.randrange(1, 6)
    if rng.random() < 0.5:
        rec["payload"] = rng.choice([None, 7, True, "hi", [1, "chan:3+"]])
    return rec


def test_write_read_roundtrip_bulk():
    rng = random.Random(20250809)
    records = [gen_record(rng, i) for i in range(1200)]
    buf = io.StringIO()
    write_trace(records, buf)
    buf.seek(0)
    assert read_trace(buf) == records


@given(st.integers(0, 10_000))
def test_single_record_roundtrip(seed):
    rec = gen_record(random.Random(seed), 0)
    buf = io.StringIO(dump_record(rec) + "\n")
    assert read_trace(buf) == [rec]


def test_missing_field_rejected():
    with pytest.raises(ValueError):
        validate_record({"step": 0, "rule": "init", "tids": []})


def test_malformed_rho_ch_rejected():
    with pytest.raises(ValueError):
        validate_record({"step": 0, "rule": "init", "tids": [], "rho_ch": ["1+"]})


def test_blank_lines_ignored():
    buf = io.StringIO('\n{"step":0,"rule":"init","tids":[0],"rho_ch":[[]]}\n\n')
    assert len(read_trace(buf)) == 1
