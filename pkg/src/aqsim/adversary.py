"""Attack strategies against the signature protocols, and the reports they yield.

Strategies plug into a run through :class:`~aqsim.protocol.Strategy` hooks.
They only see their own party's keys and whatever crosses the channel; the
report functions compare what was recovered against the real keys after the
run has finished.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .protocol import (ALICE, ARBITRATOR, BOB, RUNNERS, ChannelMessage, ConfigError, Ruling, RunConfig,
                       Strategy, Transcript, resolve_dispute)
from .qotp import Key, infer_key_pair, qotp_encrypt, table_label
from .quantum import BellKind, PauliWord, random_qubit

NONIDENTITY_WORDS = (PauliWord(x_exp=1), PauliWord(z_exp=1), PauliWord(x_exp=1, z_exp=1))


class _BellProbe(Strategy):
    """Alice swaps her outgoing quantum blocks for halves of fresh |phi+> pairs.

    When Bob later pads those halves and forwards them, Bell-measuring each
    against the kept partner reveals his two pad bits per qubit.
    """

    replace_blocks: tuple[str, ...] = ()

    def __init__(self):
        super().__init__()
        self.partner: dict[int, object] = {}
        self.recovered: str = ""
        self.outcomes: list[str] = []
        self.originals: dict[str, list] = {}

    def _probe_halves(self, count: int) -> list:
        reg = self.ctx.register
        halves = []
        for _ in range(count):
            t, h = reg.make_bell_pair(BellKind.PHI_PLUS, owner=ALICE)
            self.partner[t.id] = h
            halves.append(t)
        return halves

    def _substitute(self, msg: ChannelMessage) -> ChannelMessage:
        for name in self.replace_blocks:
            if name in msg.quantum:
                self.originals[name] = msg.quantum[name]
                msg.quantum[name] = self._probe_halves(len(msg.quantum[name]))
        msg.tampered_by.append(f"{self.party}:{self.name}")
        return msg

    def _extract(self, msg: ChannelMessage) -> Key:
        reg = self.ctx.register
        pairs = []
        for h in msg.handles():
            if h.id in self.partner:
                kind = reg.bell_measure(h, self.partner.pop(h.id))
                self.outcomes.append(kind.value)
                pairs.append(infer_key_pair(BellKind.PHI_PLUS, kind))
        key = Key.from_pairs(pairs, "K_B")
        self.recovered = key.bits
        return key

    @property
    def table_labels(self) -> list[str]:
        b = self.recovered
        return [table_label(int(b[i]), int(b[i + 1])) for i in range(0, len(b), 2)]


class KeyExtraction(_BellProbe):
    """Alice's attack on the entanglement-free scheme.

    S2: send probe halves instead of P'.  V1: learn Bob's pad on those
    halves, re-pad the genuine P' with it and forward together with Bob's
    untouched padded S_A, so the arbitrator is satisfied.  V2 return: swap
    S_A for E_KA(Q P') with a random non-identity Pauli word Q per qubit; as
    the pad is Pauli, applying Q to the ciphertext achieves this without the
    fresh return pad.
    """

    name = "key-extraction"
    replace_blocks = ("P'",)

    def __init__(self):
        super().__init__()
        self.substitution: list[str] = []

    def sign(self, default):
        return self._substitute(default())

    def intercept(self, msg):
        reg = self.ctx.register
        if msg.step == "V1" and msg.sender == BOB and self.partner:
            key = self._extract(msg)
            genuine = self.originals["P'"]
            qotp_encrypt(reg, key, genuine)
            msg.quantum["P'"] = genuine
            msg.tampered_by.append(f"{self.party}:{self.name}")
        elif msg.step == "V2" and msg.sender == ARBITRATOR and self.recovered:
            words = [NONIDENTITY_WORDS[i] for i in self.ctx.rng.integers(0, 3, size=len(msg.quantum["S_A"]))]
            for q, w in zip(msg.quantum["S_A"], words):
                reg.apply_pauli(q, w)
            self.substitution = [w.label() for w in words]
            self.forged = True
            msg.tampered_by.append(f"{self.party}:{self.name}")
        return msg


class TotalBreak(_BellProbe):
    """Alice's attack on the Bell-state scheme.

    S5: send probe halves in place of both S and P, holding off her own
    signing so the shared pairs stay fresh.  V1: recover Bob's whole pad,
    sign a message of her choice honestly (teleporting it over the shared
    pairs so Bob's V5 check matches), pad it with the recovered key and
    forward it to the arbitrator.

    Against the hardened scheme the same substitution covers P' and both
    S_A copies.
    """

    name = "total-break"

    def __init__(self, forged: str = "orthogonal"):
        super().__init__()
        if forged not in ("orthogonal", "random"):
            raise ValueError(f"unknown forged-message choice {forged!r}")
        self.forged_choice = forged
        self.forged_message: list[tuple[complex, complex]] | None = None
        self._signer = None

    def sign(self, default):
        if self.ctx.protocol == "li_bell":
            self._signer = default
            n = self.ctx.n
            halves = self._probe_halves(4 * n)
            return ChannelMessage(ALICE, BOB, "S5", {"S": halves[:3 * n], "P": halves[3 * n:]},
                                  tampered_by=[f"{self.party}:{self.name}"])
        self.replace_blocks = ("P'", "S_A1", "S_A2", "S_A")
        return self._substitute(default())

    def _choose(self) -> list[tuple[complex, complex]]:
        if self.forged_choice == "random":
            return [random_qubit(self.ctx.rng) for _ in range(self.ctx.n)]
        return [(-np.conj(b), np.conj(a)) for a, b in self.ctx.message]

    def intercept(self, msg):
        if msg.step == "V1" and msg.sender == BOB and self.partner:
            key = self._extract(msg)
            if self._signer is None:
                return msg
            self.forged_message = self._choose()
            forged = self._signer(self.forged_message)
            blocks = forged.quantum["S"] + forged.quantum["P"]
            qotp_encrypt(self.ctx.register, key, blocks)
            msg.quantum = {"S": forged.quantum["S"], "P": forged.quantum["P"]}
            msg.tampered_by.append(f"{self.party}:{self.name}")
            self.forged = True
        return msg


class GaoDisturbance(Strategy):
    """Alice scrambles the S_A copy the arbitrator returns to Bob at V2."""

    name = "gao-disturbance"

    def __init__(self, identity: bool = False):
        super().__init__()
        self.identity = identity
        self.words: list[str] = []

    def intercept(self, msg):
        if msg.step == "V2" and msg.sender == ARBITRATOR:
            block = msg.quantum["S_A"]
            if self.identity:
                words = [PauliWord()] * len(block)
            else:
                words = [NONIDENTITY_WORDS[i] for i in self.ctx.rng.integers(0, 3, size=len(block))]
            for q, w in zip(block, words):
                if not w.is_identity:
                    self.ctx.register.apply_pauli(q, w)
            self.words = [w.label() for w in words]
            if not self.identity:
                msg.tampered_by.append(f"{self.party}:{self.name}")
        return msg


class WithholdR(Strategy):
    """Alice refuses to publish r at V4."""

    name = "withhold-r"

    def publish_r(self, default):
        return None


class SubstituteBlock(Strategy):
    """Replace one quantum block of a given step with fresh random qubits."""

    def __init__(self, step: str, block: str, party: str = BOB, name: str | None = None,
                 qubits: slice | None = None):
        super().__init__()
        self.step, self.block, self.party = step, block, party
        self.name = name or f"substitute-{block}"
        self.qubits = qubits or slice(None)

    def intercept(self, msg):
        if msg.step == self.step and self.block in msg.quantum:
            reg = self.ctx.register
            block = list(msg.quantum[self.block])
            idx = range(len(block))[self.qubits]
            for i in idx:
                block[i] = reg.alloc_qubit(random_qubit(self.ctx.rng), owner=self.party)
            msg.quantum[self.block] = block
        return msg


class FlipBellRecord(Strategy):
    """Bit-flip the first qubit of one padded M_A pair on its way back to Bob."""

    name = "flip-bell-record"
    party = "Channel"

    def __init__(self, pair_index: int = 0):
        super().__init__()
        self.pair_index = pair_index

    def intercept(self, msg):
        if msg.step == "V3" and "M_A" in msg.quantum:
            self.ctx.register.apply_pauli(msg.quantum["M_A"][2 * self.pair_index], PauliWord(x_exp=1))
            msg.tampered_by.append(f"{self.party}:{self.name}")
        return msg


@dataclass(frozen=True)
class AttackReport:
    attack_name: str
    target_protocol: str
    recovered_key_bits: str
    key_bits_total: int
    key_bits_matched: int
    key_recovery_exact: bool
    forgery_accepted: bool
    disavowal_upheld: bool
    detected_at_step: str | None
    ruling: str | None
    transcript: Transcript
    details: dict


def _execute(protocol: str, config: RunConfig, strategy: Strategy):
    if protocol not in RUNNERS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    run = RUNNERS[protocol](replace(config, strategies=[*config.strategies, strategy]))
    return run, run.execute()


def _report(name: str, protocol: str, run, transcript: Transcript, strategy: Strategy,
            segment_bits: int, details: dict) -> AttackReport:
    recovered = getattr(strategy, "recovered", "")
    truth = run.keys["K_B"].bits[:segment_bits] if "K_B" in run.keys else ""
    matched = sum(a == b for a, b in zip(recovered, truth))
    exact = bool(recovered) and len(recovered) == segment_bits and recovered == truth
    ruling = None
    if transcript.accepted and transcript.record is not None and transcript.record.r is not None:
        ruling = resolve_dispute(transcript.record, run.arbitrator)
    return AttackReport(
        attack_name=name,
        target_protocol=protocol,
        recovered_key_bits=recovered,
        key_bits_total=segment_bits,
        key_bits_matched=matched,
        key_recovery_exact=exact,
        forgery_accepted=transcript.accepted and strategy.forged,
        disavowal_upheld=ruling is Ruling.SIGNATURE_INVALID,
        detected_at_step=None if transcript.accepted else transcript.halted_at,
        ruling=None if ruling is None else ruling.value,
        transcript=transcript,
        details=details,
    )


def key_extraction_attack_zou(config: RunConfig, target: str = "zou") -> AttackReport:
    """Probe-substitution key recovery followed by signature substitution."""
    if target not in ("zou", "improved"):
        raise ConfigError(f"key-extraction targets zou or improved, not {target!r}")
    strategy = KeyExtraction()
    run, transcript = _execute(target, config, strategy)
    details = {"bell_outcomes": strategy.outcomes, "table_labels": strategy.table_labels,
               "substituted_paulis": strategy.substitution}
    return _report(strategy.name, target, run, transcript, strategy, 2 * run.n, details)


def total_break_attack_li(config: RunConfig, target: str = "li_bell", forged: str = "orthogonal") -> AttackReport:
    """Full pad recovery on the Bell-state scheme, then a forged message of Alice's choosing."""
    if target not in ("li_bell", "improved"):
        raise ConfigError(f"total-break targets li_bell or improved, not {target!r}")
    strategy = TotalBreak(forged)
    run, transcript = _execute(target, config, strategy)
    segment = 8 * run.n if target == "li_bell" else 4 * run.n
    details = {"bell_outcomes": strategy.outcomes, "table_labels": strategy.table_labels}
    if strategy.forged_message is not None:
        held = run.bob.held.get("message") if transcript.accepted else None
        details["forged_message"] = [[complex(a), complex(b)] for a, b in strategy.forged_message]
        if held is not None:
            details["bob_message_fidelity_to_forged"] = run.message_fidelity(held, strategy.forged_message)
    return _report(strategy.name, target, run, transcript, strategy, segment, details)


def gao_disturbance_attack(config: RunConfig, target: str = "zou", identity: bool = False) -> AttackReport:
    """Pauli disturbance of the returned S_A, then a dispute over the stored record."""
    if target not in ("zou", "improved"):
        raise ConfigError(f"gao-disturbance targets zou or improved, not {target!r}")
    strategy = GaoDisturbance(identity)
    run, transcript = _execute(target, config, strategy)
    return _report(strategy.name, target, run, transcript, strategy, 0, {"disturbance": strategy.words})
