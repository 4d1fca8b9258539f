"""Shared machinery for the signature protocol runners.

A run owns one :class:`StateRegister`, three parties, a public board and a
channel.  Every message is routed through the channel, where registered
strategies may observe or rewrite it before it is logged and delivered.
Party behaviour can also be overridden through named hooks on a strategy
(``sign``, ``publish_r``); the protocol code itself is never forked.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Sequence

import numpy as np

from ..qotp import Key
from ..quantum import QubitHandle, RegisterError, StateRegister, random_qubit, swap_test

ALICE, BOB, ARBITRATOR = "Alice", "Bob", "Arbitrator"

COMPARE_MODES = ("exact", "swap_test")


class ConfigError(ValueError):
    pass


class Outcome(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    ABORTED = "aborted"


class Strategy:
    """Base strategy: behaves honestly and leaves channel traffic alone.

    Subclasses override :meth:`intercept` to tap the channel and, when acting
    for ``party``, :meth:`sign` or :meth:`publish_r` to replace that party's
    step.  A strategy only ever sees its own party's state through ``ctx``.
    """

    name = "honest"
    party = ALICE

    def __init__(self):
        self.ctx: TapContext | None = None
        self.forged = False

    def bind(self, ctx: TapContext) -> None:
        self.ctx = ctx

    def sign(self, default: Callable[..., ChannelMessage]) -> ChannelMessage:
        return default()

    def publish_r(self, default: Callable[[], Key | None]) -> Key | None:
        return default()

    def intercept(self, msg: ChannelMessage) -> ChannelMessage:
        return msg


@dataclass
class RunConfig:
    n: int = 4
    seed: int = 0
    message: Sequence[tuple[complex, complex]] | None = None
    compare_mode: str = "exact"
    swap_trials: int = 16
    tolerance: float = 1e-9
    signing_mode: str = "paper_example"
    strategies: Sequence[Strategy] = ()

    def validate(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if self.compare_mode not in COMPARE_MODES:
            raise ConfigError(f"unknown compare mode {self.compare_mode!r}")
        if self.compare_mode == "swap_test" and self.swap_trials < 1:
            raise ConfigError("swap_trials must be >= 1 in swap_test mode")
        if not 0 <= self.tolerance < 1:
            raise ConfigError("tolerance must lie in [0, 1)")
        if self.signing_mode not in ("paper_example", "non_commutative"):
            raise ConfigError(f"unknown signing mode {self.signing_mode!r}")
        if self.message is not None:
            if len(self.message) != self.n:
                raise ConfigError(f"message has {len(self.message)} qubits, n = {self.n}")
            for pair in self.message:
                if len(pair) != 2 or np.linalg.norm(np.asarray(pair, dtype=complex)) < 1e-9:
                    raise ConfigError(f"bad amplitude pair {pair!r}")

    def echo(self) -> dict[str, Any]:
        return {
            "n": int(self.n),
            "seed": int(self.seed),
            "message": "random" if self.message is None else [[complex(a), complex(b)] for a, b in self.message],
            "compare_mode": self.compare_mode,
            "swap_trials": int(self.swap_trials),
            "tolerance": float(self.tolerance),
            "signing_mode": self.signing_mode,
            "strategies": [f"{s.party}:{s.name}" for s in self.strategies],
        }


@dataclass
class PartyState:
    name: str
    keys: dict[str, Key] = field(default_factory=dict)
    held: dict[str, list[QubitHandle]] = field(default_factory=dict)
    strategy: str = "honest"

    def key(self, label: str) -> Key:
        try:
            return self.keys[label]
        except KeyError:
            raise PermissionError(f"{self.name} does not hold {label}") from None


@dataclass
class ChannelMessage:
    sender: str
    receiver: str
    step: str
    quantum: dict[str, list[QubitHandle]] = field(default_factory=dict)
    classical: dict[str, Any] = field(default_factory=dict)
    tampered_by: list[str] = field(default_factory=list)

    def handles(self) -> list[QubitHandle]:
        return [h for block in self.quantum.values() for h in block]

    def copy(self) -> ChannelMessage:
        return ChannelMessage(self.sender, self.receiver, self.step,
                              {k: list(v) for k, v in self.quantum.items()},
                              copy.deepcopy(self.classical), list(self.tampered_by))


@dataclass(frozen=True)
class BoardPost:
    party: str
    name: str
    value: str


class PublicBoard:
    """Append-only broadcast log readable by every party."""

    def __init__(self):
        self._posts: list[BoardPost] = []

    def post(self, party: str, name: str, value: Any) -> None:
        self._posts.append(BoardPost(party, name, str(value)))

    @property
    def posts(self) -> tuple[BoardPost, ...]:
        return tuple(self._posts)

    def latest(self, name: str) -> BoardPost | None:
        for p in reversed(self._posts):
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class MessageRecord:
    step: str
    sender: str
    receiver: str
    classical: dict[str, Any]
    blocks: dict[str, list[int]]
    classes: list[tuple[list[int], np.ndarray]]
    tampered_by: tuple[str, ...]


@dataclass(frozen=True)
class KeyUse:
    party: str
    key: str
    offset: int
    length: int
    step: str


@dataclass
class SignatureRecord:
    """What Bob keeps after accepting: message, signature copies and, if any, ``r``."""

    protocol: str
    register: StateRegister
    message: list[QubitHandle]
    signatures: list[list[QubitHandle]]
    r: Key | None
    signature_key_offset: int = 0
    compare_mode: str = "exact"
    tolerance: float = 1e-9
    swap_trials: int = 16


@dataclass(frozen=True)
class Transcript:
    protocol: str
    config: dict[str, Any]
    seed: int
    messages: tuple[MessageRecord, ...]
    board: tuple[BoardPost, ...]
    verdicts: dict[str, int]
    outcome: Outcome
    halted_at: str | None
    recovered_message_fidelity: float | None
    key_uses: tuple[KeyUse, ...]
    events: tuple[tuple[str, str, str, Any], ...]
    record: SignatureRecord | None = field(default=None, compare=False, repr=False)
    parties: dict[str, PartyState] = field(default_factory=dict, compare=False, repr=False)

    @property
    def accepted(self) -> bool:
        return self.outcome is Outcome.ACCEPTED


@dataclass
class TapContext:
    register: StateRegister
    party: PartyState
    board: PublicBoard
    rng: np.random.Generator
    protocol: str
    n: int
    message: list[tuple[complex, complex]] | None


def _groups(register: StateRegister, a: Sequence[QubitHandle], b: Sequence[QubitHandle] | None) -> list[list[int]]:
    """Partition positions so that no entanglement class straddles two groups."""
    parent = list(range(len(a)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for i in range(len(a)):
        hs = [a[i]] if b is None else [a[i], b[i]]
        for h in hs:
            cid = register.class_id(h)
            if cid in owner:
                parent[find(i)] = find(owner[cid])
            else:
                owner[cid] = i
    out: dict[int, list[int]] = {}
    for i in range(len(a)):
        out.setdefault(find(i), []).append(i)
    return list(out.values())


def state_compare(
    register: StateRegister,
    a: Sequence[QubitHandle],
    b: Sequence[QubitHandle] | np.ndarray,
    mode: str = "exact",
    tolerance: float = 1e-9,
    trials: int = 1,
    copies: Sequence[Any] | None = None,
) -> bool:
    """Decide whether register ``a`` holds the same state as ``b``.

    ``exact`` is non-destructive: every group of mutually entangled positions
    must reach a swap overlap (fidelity, for a pure reference) of at least
    ``1 - tolerance``.  ``swap_test`` runs ``trials`` physical swap tests on
    caller-supplied copies, one ancilla per group, and passes only if every
    test passes.  For a handle ``b`` each copy is a pair ``(a_copy, b_copy)``;
    for a reference vector each copy is just ``a_copy``.
    """
    reference = isinstance(b, np.ndarray)
    if not reference and len(a) != len(b):
        raise RegisterError("compared registers differ in length")
    if mode == "exact":
        if reference:
            return register.fidelity(a, b) >= 1 - tolerance
        return all(
            register.swap_overlap([a[i] for i in g], [b[i] for i in g]) >= 1 - tolerance
            for g in _groups(register, a, b)
        )
    if mode != "swap_test":
        raise ValueError(f"unknown compare mode {mode!r}")
    if copies is None or len(copies) < trials:
        raise RegisterError(f"swap_test needs {trials} copies, got {0 if copies is None else len(copies)}")
    passed = True
    for c in copies[:trials]:
        if reference:
            ac, bc = list(c), register.alloc_state(b, owner="Comparator")
            groups = [list(range(len(ac)))]
        else:
            ac, bc = list(c[0]), list(c[1])
            groups = _groups(register, ac, bc)
        for g in groups:
            passed &= swap_test(register, [ac[i] for i in g], [bc[i] for i in g])
    return passed


class ProtocolRun:
    """One execution of a protocol: register, parties, board, channel and log."""

    protocol = ""

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.n = int(config.n)
        msg_seq, key_seq, meas_seq, adv_seq = np.random.SeedSequence(int(config.seed)).spawn(4)
        self.register = StateRegister(meas_seq)
        self.register.rng_seed = int(config.seed)
        if config.message is None:
            mrng = np.random.default_rng(msg_seq)
            self.message = [random_qubit(mrng) for _ in range(self.n)]
        else:
            self.message = [_normalized(p) for p in config.message]
        krng = np.random.default_rng(key_seq)
        self.keys = {label: Key.random(length, krng, label) for label, length in self.key_lengths().items()}
        self.parties = {name: PartyState(name, {k: self.keys[k] for k in labels})
                        for name, labels in self.holdings().items()}
        self.board = PublicBoard()
        self.strategies = list(config.strategies)
        adv_rngs = [np.random.default_rng(s) for s in adv_seq.spawn(max(1, len(self.strategies)))]
        for strat, rng in zip(self.strategies, adv_rngs):
            party = self.parties.get(strat.party) or PartyState(strat.party)
            party.strategy = strat.name
            strat.bind(TapContext(self.register, party, self.board, rng, self.protocol, self.n,
                                  self.message if strat.party == ALICE else None))
        self.verdicts: dict[str, int] = {}
        self.record: SignatureRecord | None = None
        self._messages: list[MessageRecord] = []
        self._key_uses: list[KeyUse] = []
        self._events: list[tuple[str, str, str, Any]] = []

    # -- hooks for subclasses -------------------------------------------------

    def key_lengths(self) -> dict[str, int]:
        raise NotImplementedError

    def holdings(self) -> dict[str, tuple[str, ...]]:
        raise NotImplementedError

    def execute(self) -> Transcript:
        raise NotImplementedError

    # -- helpers --------------------------------------------------------------

    @property
    def alice(self) -> PartyState:
        return self.parties[ALICE]

    @property
    def bob(self) -> PartyState:
        return self.parties[BOB]

    @property
    def arbitrator(self) -> PartyState:
        return self.parties[ARBITRATOR]

    def use_key(self, party: str, label: str, offset: int, length: int, step: str) -> Key:
        key = self.parties[party].key(label)
        self._key_uses.append(KeyUse(party, label, offset, length, step))
        return key

    def log(self, party: str, step: str, what: str, value: Any) -> None:
        self._events.append((party, step, what, value))

    def act(self, party: str, hook: str, default: Callable[..., Any]) -> Any:
        fn = default
        for s in self.strategies:
            if s.party == party:
                fn = partial(getattr(s, hook), fn)
        return fn()

    def send(self, msg: ChannelMessage) -> ChannelMessage:
        for s in self.strategies:
            before = msg.copy()
            out = s.intercept(msg.copy())
            marked = len(out.tampered_by) > len(before.tampered_by)
            if not marked and (out.quantum != before.quantum or out.classical != before.classical):
                out.tampered_by.append(f"{s.party}:{s.name}")
            msg = out
        self._messages.append(MessageRecord(
            step=msg.step, sender=msg.sender, receiver=msg.receiver,
            classical=copy.deepcopy(msg.classical),
            blocks={k: [h.id for h in v] for k, v in msg.quantum.items()},
            classes=self.register.snapshot(msg.handles()) if msg.handles() else [],
            tampered_by=tuple(msg.tampered_by),
        ))
        return msg

    def alloc_message(self, owner: str, amplitudes: Sequence[tuple[complex, complex]] | None = None) -> list[QubitHandle]:
        amps = self.message if amplitudes is None else amplitudes
        return [self.register.alloc_qubit(p, owner=owner) for p in amps]

    def compare(self, party: str, step: str, what: str, a: Sequence[QubitHandle], b: Sequence[QubitHandle]) -> bool:
        cfg = self.config
        if cfg.compare_mode == "exact":
            ok = state_compare(self.register, a, b, "exact", cfg.tolerance)
        else:
            copies = []
            for _ in range(cfg.swap_trials):
                cl = self.register.clone(list(a) + list(b), owner="Comparator")
                copies.append((cl[:len(a)], cl[len(a):]))
            ok = state_compare(self.register, a, b, "swap_test", cfg.tolerance, cfg.swap_trials, copies)
        self.log(party, step, what, int(ok))
        return ok

    def message_fidelity(self, handles: Sequence[QubitHandle], amplitudes=None) -> float:
        amps = self.message if amplitudes is None else amplitudes
        f = 1.0
        for h, p in zip(handles, amps):
            f *= self.register.fidelity([h], np.asarray(p, dtype=complex))
        return f

    def finish(self, outcome: Outcome, halted_at: str | None = None,
               fidelity: float | None = None) -> Transcript:
        if outcome is Outcome.ACCEPTED:
            assert all(v == 1 for v in self.verdicts.values()), self.verdicts
        else:
            self.record = None
        return Transcript(
            protocol=self.protocol,
            config=self.config.echo(),
            seed=int(self.config.seed),
            messages=tuple(self._messages),
            board=self.board.posts,
            verdicts=dict(self.verdicts),
            outcome=outcome,
            halted_at=halted_at,
            recovered_message_fidelity=fidelity,
            key_uses=tuple(self._key_uses),
            events=tuple(self._events),
            record=self.record,
            parties=self.parties,
        )


def _normalized(pair: Sequence[complex]) -> tuple[complex, complex]:
    v = np.asarray(pair, dtype=complex)
    v = v / np.linalg.norm(v)
    return complex(v[0]), complex(v[1])
