"""Arbitrated signature over pre-shared Bell pairs with teleported message copy."""
from __future__ import annotations

from typing import Sequence

from ..qotp import SigningMode, qotp_decrypt, qotp_encrypt, signing_transform
from ..quantum import BellKind, teleport_correction
from .engine import (ALICE, ARBITRATOR, BOB, ChannelMessage, Outcome, ProtocolRun,
                     RunConfig, SignatureRecord, Transcript)


class LiBellRun(ProtocolRun):
    """Signing S1-S5 and verification V1-V5.

    Key layout (bits):
      K_A: [0, m*n) signing transform, [m*n, m*n + 6n) signature pad
      K_B: [0, 8n) Bob's V1 pad, [8n, 8n + 12n + 2) arbitrator's V3 pad
    where ``m`` is 1 in ``paper_example`` mode and 3 otherwise.
    """

    protocol = "li_bell"

    @property
    def _m(self) -> int:
        return SigningMode(self.config.signing_mode).bits_per_qubit

    def key_lengths(self) -> dict[str, int]:
        n = self.n
        return {"K_A": self._m * n + 6 * n, "K_B": 8 * n + 2 * (6 * n + 1)}

    def holdings(self) -> dict[str, tuple[str, ...]]:
        return {ALICE: ("K_A",), BOB: ("K_B",), ARBITRATOR: ("K_A", "K_B")}

    # -- Alice ------------------------------------------------------------------

    def _alice_sign(self, amplitudes: Sequence[tuple[complex, complex]] | None = None) -> ChannelMessage:
        n, reg, mode = self.n, self.register, self.config.signing_mode
        # S1: three copies
        p_sign = self.alloc_message(ALICE, amplitudes)
        p_tele = self.alloc_message(ALICE, amplitudes)
        p_send = self.alloc_message(ALICE, amplitudes)
        # S2: R_A = M_{K_A} P
        k_a = self.use_key(ALICE, "K_A", 0, self._m * n, "S2")
        signing_transform(reg, k_a, p_sign, mode)
        # S3: Bell measurement of copy two against Alice's halves
        shared = self.alice.held.pop("shared")
        kinds = [reg.bell_measure(p, a) for p, a in zip(p_tele, shared)]
        self.log(ALICE, "S3", "bell_outcomes", [k.value for k in kinds])
        m_a = [q for k in kinds for q in reg.make_bell_pair(k, owner=ALICE)]
        # S4: S = E_{K_A}(M_A, R_A)
        sig = m_a + p_sign
        self.use_key(ALICE, "K_A", self._m * n, 6 * n, "S4")
        qotp_encrypt(reg, k_a, sig, offset=self._m * n)
        return ChannelMessage(ALICE, BOB, "S5", {"S": sig, "P": p_send})

    # -- protocol ---------------------------------------------------------------

    def execute(self) -> Transcript:
        n, reg = self.n, self.register
        pairs = [reg.make_bell_pair(BellKind.PHI_PLUS, owner=ALICE) for _ in range(n)]
        self.alice.held["shared"] = [a for a, _ in pairs]
        self.bob.held["shared"] = [b for _, b in pairs]

        msg = self.send(self.act(ALICE, "sign", self._alice_sign))

        # V1: Bob pads (S, P) with K_B and forwards
        sig, p = msg.quantum["S"], msg.quantum["P"]
        k_b = self.use_key(BOB, "K_B", 0, 8 * n, "V1")
        qotp_encrypt(reg, k_b, sig + p)
        msg = self.send(ChannelMessage(BOB, ARBITRATOR, "V1", {"S": sig, "P": p}))

        # V2: arbitrator strips both pads and checks R_A = M_{K_A} P
        sig, p = msg.quantum["S"], msg.quantum["P"]
        k_b = self.use_key(ARBITRATOR, "K_B", 0, 8 * n, "V2")
        qotp_decrypt(reg, k_b, sig + p)
        k_a = self.use_key(ARBITRATOR, "K_A", self._m * n, 6 * n, "V2")
        qotp_decrypt(reg, k_a, sig, offset=self._m * n)
        m_a, r_a = sig[:2 * n], sig[2 * n:]
        self.use_key(ARBITRATOR, "K_A", 0, self._m * n, "V2")
        signing_transform(reg, k_a, p, self.config.signing_mode)
        ok = self.compare(ARBITRATOR, "V2", "R_A == M(P)", r_a, p)
        signing_transform(reg, k_a, p, self.config.signing_mode, inverse=True)
        self.verdicts["V"] = int(ok)

        # V3: read M_A, re-prepare it twice, rebuild S and return everything under K_B
        kinds = [reg.bell_measure(m_a[2 * i], m_a[2 * i + 1]) for i in range(n)]
        self.log(ARBITRATOR, "V3", "M_A", [k.value for k in kinds])
        m_out = [q for k in kinds for q in reg.make_bell_pair(k, owner=ARBITRATOR)]
        m_sig = [q for k in kinds for q in reg.make_bell_pair(k, owner=ARBITRATOR)]
        sig = m_sig + r_a
        self.use_key(ARBITRATOR, "K_A", self._m * n, 6 * n, "V3")
        qotp_encrypt(reg, k_a, sig, offset=self._m * n)
        v_qubit = [reg.alloc_qubit((0, 1) if ok else (1, 0), owner=ARBITRATOR)]
        self.use_key(ARBITRATOR, "K_B", 8 * n, 12 * n + 2, "V3")
        qotp_encrypt(reg, k_b, m_out + sig + p + v_qubit, offset=8 * n)
        msg = self.send(ChannelMessage(ARBITRATOR, BOB, "V3",
                                       {"M_A": m_out, "S": sig, "P": p, "V": v_qubit}))

        # V4: Bob unpads and reads V
        q = msg.quantum
        m_out, sig, p, v_qubit = q["M_A"], q["S"], q["P"], q["V"]
        k_b = self.use_key(BOB, "K_B", 8 * n, 12 * n + 2, "V4")
        qotp_decrypt(reg, k_b, m_out + sig + p + v_qubit, offset=8 * n)
        v = reg.measure(v_qubit[0])
        self.log(BOB, "V4", "V", v)
        if v != 1:
            return self.finish(Outcome.REJECTED, "V4")

        # V5: teleportation recovery of copy two, compared with P
        kinds = [reg.bell_measure(m_out[2 * i], m_out[2 * i + 1]) for i in range(n)]
        self.log(BOB, "V5", "M_A", [k.value for k in kinds])
        halves = self.bob.held["shared"]
        for h, k in zip(halves, kinds):
            reg.apply_pauli(h, teleport_correction(k))
        ok = self.compare(BOB, "V5", "teleported == P", halves, p)
        fidelity = self.message_fidelity(halves)
        if not ok:
            return self.finish(Outcome.REJECTED, "V5", fidelity)
        self.bob.held["message"] = p
        self.bob.held["signature"] = sig
        self.record = SignatureRecord(self.protocol, reg, p, [sig], None, self._m * n,
                                      self.config.compare_mode, self.config.tolerance,
                                      self.config.swap_trials)
        return self.finish(Outcome.ACCEPTED, None, fidelity)


def run_li_bell(config: RunConfig) -> Transcript:
    return LiBellRun(config).execute()
