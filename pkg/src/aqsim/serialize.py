"""Stable YAML rendering of transcripts and attack reports.

The first line of every document is ``format_version: 1``.  Complex
amplitudes are written as fixed-precision strings so reruns with the same
seed produce byte-identical files.
"""
from __future__ import annotations

import enum
from typing import Any

import numpy as np
import yaml

FORMAT_VERSION = 1


def fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.12f}{z.imag:+.12f}j"


def fmt_float(x: float | None) -> str | None:
    return None if x is None else f"{x:.15g}"


def _plain(value: Any) -> Any:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (bool, str, int)) or value is None:
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return fmt_complex(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


def transcript_to_dict(t) -> dict[str, Any]:
    return {
        "protocol": t.protocol,
        "seed": t.seed,
        "config": _plain(t.config),
        "messages": [
            {
                "step": m.step,
                "from": m.sender,
                "to": m.receiver,
                "tampered_by": list(m.tampered_by),
                "classical": _plain(m.classical),
                "blocks": {k: list(v) for k, v in m.blocks.items()},
                "classes": [
                    {"qubits": list(qubits), "vector": [fmt_complex(a) for a in vec]}
                    for qubits, vec in m.classes
                ],
            }
            for m in t.messages
        ],
        "key_uses": [
            {"party": u.party, "key": u.key, "offset": u.offset, "length": u.length, "step": u.step}
            for u in t.key_uses
        ],
        "events": [
            {"party": p, "step": s, "what": w, "value": _plain(v)} for p, s, w, v in t.events
        ],
        "board": [{"party": p.party, "name": p.name, "value": p.value} for p in t.board],
        "verdicts": dict(t.verdicts),
        "outcome": t.outcome.value,
        "halted_at": t.halted_at,
        "recovered_message_fidelity": fmt_float(t.recovered_message_fidelity),
    }


def report_to_dict(r) -> dict[str, Any]:
    return {
        "attack": {
            "name": r.attack_name,
            "target_protocol": r.target_protocol,
            "recovered_key_bits": r.recovered_key_bits,
            "key_bits_total": r.key_bits_total,
            "key_bits_matched": r.key_bits_matched,
            "key_recovery_exact": r.key_recovery_exact,
            "forgery_accepted": r.forgery_accepted,
            "disavowal_upheld": r.disavowal_upheld,
            "detected_at_step": r.detected_at_step,
            "ruling": r.ruling,
            "details": _plain(r.details),
        },
        "transcript": transcript_to_dict(r.transcript),
    }


def dump_document(kind: str, body: dict[str, Any]) -> str:
    doc = {"format_version": FORMAT_VERSION, "kind": kind, **body}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100, allow_unicode=True)


def dump_transcript(t) -> str:
    return dump_document("transcript", transcript_to_dict(t))


def dump_report(r) -> str:
    return dump_document("attack_report", report_to_dict(r))


def load_document(text: str) -> dict[str, Any]:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ValueError("not an aqsim report (missing or unsupported format_version)")
    return doc
