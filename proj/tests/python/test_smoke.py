import os

import pytest

import udsmon


def test_frames_roundtrip():
    req = udsmon.parse_request(b"\x27\x01")
    assert req["sid"] == 0x27
    assert req["subfunction"] == 0x01
    rsp = udsmon.parse_response(b"\x7f\x27\x35")
    assert not rsp["positive"]
    assert rsp["nrc"] == 0x35
    assert udsmon.roundtrip_request(b"\x22\xf1\x90") == b"\x22\xf1\x90"
    assert udsmon.roundtrip_response(b"\x62\xf1\x90\x01") == b"\x62\xf1\x90\x01"


def test_malformed_frames_raise():
    with pytest.raises(udsmon.MalformedFrame):
        udsmon.parse_response(b"\x7f\x22")
    with pytest.raises(udsmon.NotAResponse):
        udsmon.parse_response(b"\x10\x03")
    with pytest.raises(udsmon.UdsmonError):
        udsmon.parse_request(b"")


def test_catalog_and_stats():
    rows = udsmon.catalog()
    assert len(rows) == 53
    assert {r["tactic"] for r in rows} == {"RD", "PS", "PE", "DE", "CA", "DS", "LM", "CL", "AF"}
    s = udsmon.stats()
    assert (s["ar_context_sids"], s["context_sids"]) == (13, 26)
    assert (s["ar_full"], s["ar_partial"]) == (20, 10)
    assert 38.0 <= s["ratio_derived"] <= 56.0


def test_simulate_and_replay(tmp_path):
    out = str(tmp_path / "pe4")
    udsmon.simulate("AT-PE-4", 1, out)
    report = udsmon.replay(
        os.path.join(out, "trace.jsonl"),
        store=os.path.join(out, "store.txt"),
        topology=os.path.join(out, "topology.txt"),
        ti=os.path.join(out, "ti.jsonl"),
    )
    rules = {a["rule"] for a in report["alerts"]}
    assert "slp-sa-failures" in rules
    assert "clc-vs-access" in rules


def test_unknown_technique(tmp_path):
    with pytest.raises(udsmon.UnknownTechnique):
        udsmon.simulate("AT-XX-9", 1, str(tmp_path))


def test_coverage_matrix():
    m = udsmon.coverage(1)
    assert m["passed"] == 53
    assert m["benign"]["verdict"] == "pass"
