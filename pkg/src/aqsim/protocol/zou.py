"""Entanglement-free arbitrated signatures: the original scheme and the hardened one.

Both share the same skeleton.  The hardened variant (``improved = True``)
differs in four places: the message is scrambled with a keyed
non-commuting transform instead of a one-time pad, Alice sends two copies of
``S_A``, Bob checks ``R_AB`` and the two copies before forwarding anything,
and at V3 he compares the returned ``S_A`` with the copy he kept.

Key layout (bits), ``n`` qubits:
  r    : 2n (original, pad) or 3n (hardened, keyed transform)
  K_AB : 2n
  K_A  : 2n, both copies of S_A use the same bits
  K_B  : [0, 4n) Bob's V1 pad, [4n, 8n) arbitrator's V2 pad
"""
from __future__ import annotations

from typing import Sequence

from ..qotp import Key, qotp_decrypt, qotp_encrypt, signing_transform
from ..quantum import QubitHandle
from .engine import (ALICE, ARBITRATOR, BOB, ChannelMessage, Outcome, ProtocolRun,
                     RunConfig, SignatureRecord, Transcript)


def apply_r(register, r: Key, qubits: Sequence[QubitHandle], improved: bool, inverse: bool = False) -> None:
    """Scramble (or unscramble) the message with the random key ``r``."""
    if improved:
        signing_transform(register, r, qubits, "non_commutative", inverse=inverse)
    elif inverse:
        qotp_decrypt(register, r, qubits)
    else:
        qotp_encrypt(register, r, qubits)


class ZouRun(ProtocolRun):
    protocol = "zou"
    improved = False

    def key_lengths(self) -> dict[str, int]:
        n = self.n
        return {"r": (3 if self.improved else 2) * n, "K_AB": 2 * n, "K_A": 2 * n, "K_B": 8 * n}

    def holdings(self) -> dict[str, tuple[str, ...]]:
        return {ALICE: ("K_A", "K_AB", "r"), BOB: ("K_B", "K_AB"), ARBITRATOR: ("K_A", "K_B")}

    @property
    def _sig_blocks(self) -> tuple[str, ...]:
        return ("S_A1", "S_A2") if self.improved else ("S_A",)

    # -- Alice ------------------------------------------------------------------

    def _alice_sign(self, amplitudes: Sequence[tuple[complex, complex]] | None = None) -> ChannelMessage:
        n, reg = self.n, self.register
        r = self.alice.key("r")
        copies = [self.alloc_message(ALICE, amplitudes) for _ in range(2 + len(self._sig_blocks))]
        self.use_key(ALICE, "r", 0, len(r), "S1")
        for c in copies:
            apply_r(reg, r, c, self.improved)
        p_prime, r_ab, *sigs = copies
        k_ab = self.use_key(ALICE, "K_AB", 0, 2 * n, "S2")
        qotp_encrypt(reg, k_ab, r_ab)
        k_a = self.use_key(ALICE, "K_A", 0, 2 * n, "S2")
        for s in sigs:
            qotp_encrypt(reg, k_a, s)
        blocks = {"P'": p_prime, "R_AB": r_ab, **dict(zip(self._sig_blocks, sigs))}
        return ChannelMessage(ALICE, BOB, "S2", blocks)

    def _alice_publish_r(self) -> Key | None:
        return self.alice.key("r")

    # -- checks -----------------------------------------------------------------

    def _check_r_ab(self, step: str, p_prime, r_ab) -> bool:
        k_ab = self.use_key(BOB, "K_AB", 0, 2 * self.n, step)
        qotp_encrypt(self.register, k_ab, p_prime)
        ok = self.compare(BOB, step, "E_KAB(P') == R_AB", p_prime, r_ab)
        qotp_decrypt(self.register, k_ab, p_prime)
        return ok

    # -- protocol ---------------------------------------------------------------

    def execute(self) -> Transcript:
        n, reg = self.n, self.register
        msg = self.send(self.act(ALICE, "sign", self._alice_sign))
        p_prime, r_ab = msg.quantum["P'"], msg.quantum["R_AB"]
        s_a = msg.quantum[self._sig_blocks[0]]
        self.bob.held["R_AB"] = r_ab

        if self.improved:
            kept = msg.quantum["S_A2"]
            ok_rab = self._check_r_ab("V1", p_prime, r_ab)
            ok_copies = self.compare(BOB, "V1", "S_A1 == S_A2", s_a, kept)
            if not (ok_rab and ok_copies):
                return self.finish(Outcome.ABORTED, "V1")
            self.bob.held["S_A2"] = kept

        # V1
        k_b = self.use_key(BOB, "K_B", 0, 4 * n, "V1")
        qotp_encrypt(reg, k_b, p_prime + s_a)
        msg = self.send(ChannelMessage(BOB, ARBITRATOR, "V1", {"P'": p_prime, "S_A": s_a}))

        # V2
        p_prime, s_a = msg.quantum["P'"], msg.quantum["S_A"]
        k_b = self.use_key(ARBITRATOR, "K_B", 0, 4 * n, "V2")
        qotp_decrypt(reg, k_b, p_prime + s_a)
        k_a = self.use_key(ARBITRATOR, "K_A", 0, 2 * n, "V2")
        qotp_encrypt(reg, k_a, p_prime)
        ok = self.compare(ARBITRATOR, "V2", "S_A == E_KA(P')", s_a, p_prime)
        qotp_decrypt(reg, k_a, p_prime)
        self.verdicts["V_T"] = int(ok)
        self.board.post(ARBITRATOR, "V_T", int(ok))
        if not ok:
            return self.finish(Outcome.ABORTED, "V2")
        self.use_key(ARBITRATOR, "K_B", 4 * n, 4 * n, "V2")
        qotp_encrypt(reg, k_b, p_prime + s_a, offset=4 * n)
        msg = self.send(ChannelMessage(ARBITRATOR, BOB, "V2", {"P'": p_prime, "S_A": s_a}))

        # V3
        p_prime, s_a = msg.quantum["P'"], msg.quantum["S_A"]
        k_b = self.use_key(BOB, "K_B", 4 * n, 4 * n, "V3")
        qotp_decrypt(reg, k_b, p_prime + s_a, offset=4 * n)
        ok = self._check_r_ab("V3", p_prime, r_ab)
        if self.improved:
            ok = self.compare(BOB, "V3", "S_A1 == S_A2", s_a, self.bob.held["S_A2"]) and ok
        self.verdicts["V_B"] = int(ok)
        self.board.post(BOB, "V_B", int(ok))
        if not ok:
            return self.finish(Outcome.REJECTED, "V3")

        # V4
        r = self.act(ALICE, "publish_r", self._alice_publish_r)
        if r is None:
            self.log(ALICE, "V4", "r_published", 0)
            return self.finish(Outcome.ABORTED, "V4")
        self.board.post(ALICE, "r", r.hex())
        posted = Key.from_hex(self.board.latest("r").value, len(self.keys["r"]), "r")
        apply_r(reg, posted, p_prime, self.improved, inverse=True)
        fidelity = self.message_fidelity(p_prime)
        sigs = [s_a, self.bob.held["S_A2"]] if self.improved else [s_a]
        self.bob.held["message"] = p_prime
        self.record = SignatureRecord(self.protocol, reg, p_prime, sigs, posted, 0,
                                      self.config.compare_mode, self.config.tolerance,
                                      self.config.swap_trials)
        return self.finish(Outcome.ACCEPTED, None, fidelity)


class ImprovedRun(ZouRun):
    protocol = "improved"
    improved = True


def run_zou(config: RunConfig) -> Transcript:
    return ZouRun(config).execute()


def run_improved(config: RunConfig) -> Transcript:
    return ImprovedRun(config).execute()
