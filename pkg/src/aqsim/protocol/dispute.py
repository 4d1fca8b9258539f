from __future__ import annotations

import enum

from ..qotp import qotp_decrypt, qotp_encrypt
from .engine import PartyState, SignatureRecord, state_compare
from .zou import apply_r


class Ruling(str, enum.Enum):
    SIGNATURE_VALID = "signature_valid"
    SIGNATURE_INVALID = "signature_invalid"


class DisputeError(ValueError):
    pass


def resolve_dispute(record: SignatureRecord, arbitrator: PartyState) -> Ruling:
    """Arbitrator's judgement on a stored ``(P, S_A, r)``.

    ``P`` is rescrambled with ``r``, padded with ``K_A`` and compared against
    every stored signature copy; the record's qubits are restored afterwards
    in exact mode.
    """
    if record.r is None:
        raise DisputeError("record carries no r; cannot rebuild the scrambled message")
    if record.protocol not in ("zou", "improved"):
        raise DisputeError(f"no dispute procedure for protocol {record.protocol!r}")
    reg = record.register
    improved = record.protocol == "improved"
    k_a = arbitrator.key("K_A")
    apply_r(reg, record.r, record.message, improved)
    qotp_encrypt(reg, k_a, record.message, offset=record.signature_key_offset)
    valid = True
    for sig in record.signatures:
        if record.compare_mode == "exact":
            valid &= state_compare(reg, sig, record.message, "exact", record.tolerance)
        else:
            copies = []
            for _ in range(record.swap_trials):
                cl = reg.clone(list(sig) + list(record.message), owner="Comparator")
                copies.append((cl[:len(sig)], cl[len(sig):]))
            valid &= state_compare(reg, sig, record.message, "swap_test", record.tolerance,
                                   record.swap_trials, copies)
    qotp_decrypt(reg, k_a, record.message, offset=record.signature_key_offset)
    apply_r(reg, record.r, record.message, improved, inverse=True)
    return Ruling.SIGNATURE_VALID if valid else Ruling.SIGNATURE_INVALID
