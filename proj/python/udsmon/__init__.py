"""UDS security event logging and detection."""

import json

from ._udsmon import (
    MalformedFrame,
    NotAResponse,
    ParseError,
    PreconditionError,
    UdsmonError,
    UnknownTechnique,
    catalog,
    parse_request,
    parse_response,
    roundtrip_request,
    roundtrip_response,
    simulate,
    stats,
    stats_text,
)
from . import _udsmon


def replay(trace, store=None, topology=None, ti=None, policy=None, rules=None):
    """Run a trace file through sensing and detection; returns the alert report."""
    return json.loads(_udsmon.replay_json(trace, store, topology, ti, policy, rules))


def coverage(seed=1):
    """Simulate every catalog technique and return the coverage matrix."""
    return json.loads(_udsmon.coverage_json(seed))


__all__ = [
    "MalformedFrame",
    "NotAResponse",
    "ParseError",
    "PreconditionError",
    "UdsmonError",
    "UnknownTechnique",
    "catalog",
    "coverage",
    "parse_request",
    "parse_response",
    "replay",
    "roundtrip_request",
    "roundtrip_response",
    "simulate",
    "stats",
    "stats_text",
]
