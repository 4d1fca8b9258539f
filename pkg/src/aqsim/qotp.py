"""Quantum one-time pad, the signing transforms, and Bell-state key inference.

Key bits are consumed two per qubit: bit ``2i-1`` (1-based) drives ``Z`` and
bit ``2i`` drives ``X``.  Internally every per-qubit pad is a
:class:`~aqsim.quantum.PauliWord`; bitstrings are only parsed in
:meth:`Key.schedule`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantum import BELL_ORDER, H, BellKind, PauliWord, QubitHandle, StateRegister


class KeyExhaustedError(ValueError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"key exhausted: need {needed} bits, {available} available")
        self.needed = needed
        self.available = available


@dataclass(frozen=True)
class Key:
    """Classical key material; ``bits`` is a string of ``'0'``/``'1'``."""

    bits: str
    label: str = "other"

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise ValueError("key bits must be '0'/'1'")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def random(cls, nbits: int, rng: np.random.Generator, label: str = "other") -> Key:
        return cls("".join(str(b) for b in rng.integers(0, 2, size=nbits)), label)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, int]], label: str = "other") -> Key:
        """Build a key from per-qubit ``(z_exp, x_exp)`` pairs."""
        return cls("".join(f"{z}{x}" for z, x in pairs), label)

    def segment(self, offset: int, length: int) -> Key:
        if offset < 0 or offset + length > len(self.bits):
            raise KeyExhaustedError(offset + length, len(self.bits))
        return Key(self.bits[offset:offset + length], self.label)

    def schedule(self, nqubits: int, offset: int = 0) -> KeySchedule:
        need = offset + 2 * nqubits
        if need > len(self.bits):
            raise KeyExhaustedError(need, len(self.bits))
        b = self.bits
        return KeySchedule(tuple(
            (int(b[offset + 2 * i]), int(b[offset + 2 * i + 1])) for i in range(nqubits)
        ))

    def hex(self) -> str:
        """Lowercase hex, first key bit most significant, zero-padded on the right."""
        if not self.bits:
            return ""
        pad = (-len(self.bits)) % 4
        width = (len(self.bits) + pad) // 4
        return format(int(self.bits + "0" * pad, 2), f"0{width}x")

    @classmethod
    def from_hex(cls, text: str, nbits: int | None = None, label: str = "other") -> Key:
        if not text:
            bits = ""
        else:
            bits = format(int(text, 16), f"0{4 * len(text)}b")
        if nbits is not None:
            if nbits > len(bits) or set(bits[nbits:]) - {"0"}:
                raise ValueError(f"hex {text!r} does not encode a {nbits}-bit key")
            bits = bits[:nbits]
        return cls(bits, label)


@dataclass(frozen=True)
class KeySchedule:
    """Per-qubit ``(z_exp, x_exp)`` pairs derived from a key segment."""

    pairs: tuple[tuple[int, int], ...]

    def words(self) -> list[PauliWord]:
        return [PauliWord(x_exp=x, z_exp=z) for z, x in self.pairs]


def _check(key: Key, qubits: Sequence[QubitHandle], per_qubit: int, offset: int) -> None:
    need = offset + per_qubit * len(qubits)
    if need > len(key):
        raise KeyExhaustedError(need, len(key))


def qotp_encrypt(register: StateRegister, key: Key, qubits: Sequence[QubitHandle], offset: int = 0) -> None:
    """Apply ``X**k(2i) Z**k(2i-1)`` to qubit ``i`` (Z first)."""
    _check(key, qubits, 2, offset)
    for q, word in zip(qubits, key.schedule(len(qubits), offset).words()):
        if not word.is_identity:
            register.apply_pauli(q, word)


def qotp_decrypt(register: StateRegister, key: Key, qubits: Sequence[QubitHandle], offset: int = 0) -> None:
    """Apply ``Z**k(2i-1) X**k(2i)`` to qubit ``i`` (X first)."""
    _check(key, qubits, 2, offset)
    for q, (z, x) in zip(qubits, key.schedule(len(qubits), offset).pairs):
        if x:
            register.apply_pauli(q, PauliWord(x_exp=1))
        if z:
            register.apply_pauli(q, PauliWord(z_exp=1))


class SigningMode(str, enum.Enum):
    PAPER_EXAMPLE = "paper_example"
    NON_COMMUTATIVE = "non_commutative"

    @property
    def bits_per_qubit(self) -> int:
        return 1 if self is SigningMode.PAPER_EXAMPLE else 3


def signing_matrix(bits: Sequence[int], mode: SigningMode | str) -> np.ndarray:
    """Single-qubit matrix of the keyed signing transform for one qubit's key bits."""
    mode = SigningMode(mode)
    if mode is SigningMode.PAPER_EXAMPLE:
        (k,) = bits
        return PauliWord(x_exp=1 ^ k, z_exp=k).matrix
    b1, b2, b3 = bits
    m = PauliWord(x_exp=1 ^ b1, z_exp=b1 ^ b2).matrix
    return H @ m if b3 else m


def signing_transform(
    register: StateRegister,
    key: Key,
    qubits: Sequence[QubitHandle],
    mode: SigningMode | str = SigningMode.PAPER_EXAMPLE,
    offset: int = 0,
    inverse: bool = False,
) -> None:
    """Keyed unitary M_K applied qubit-wise.

    ``paper_example`` uses one bit ``k`` per qubit: ``X**(1^k) Z**k``.
    ``non_commutative`` uses three bits ``(b1, b2, b3)``:
    ``H**b3 X**(1^b1) Z**(b1^b2)``, which stops commuting with Pauli
    operators whenever ``b3 = 1``.
    """
    mode = SigningMode(mode)
    per = mode.bits_per_qubit
    _check(key, qubits, per, offset)
    for i, q in enumerate(qubits):
        start = offset + per * i
        bits = [int(c) for c in key.bits[start:start + per]]
        m = signing_matrix(bits, mode)
        register.apply_unitary([q], m.conj().T if inverse else m)


def bell_image(initial: BellKind, z_exp: int, x_exp: int) -> BellKind:
    """Bell state reached by padding the first qubit of ``initial`` with ``(z_exp, x_exp)``."""
    word = PauliWord(x_exp=x_exp, z_exp=z_exp)
    v = np.kron(word.matrix, np.eye(2)) @ initial.vector
    overlaps = [abs(np.vdot(k.vector, v)) for k in BELL_ORDER]
    return BELL_ORDER[int(np.argmax(overlaps))]


_INFER = {
    (initial, bell_image(initial, z, x)): (z, x)
    for initial in BELL_ORDER
    for z in (0, 1)
    for x in (0, 1)
}


def infer_key_pair(initial: BellKind, measured: BellKind) -> tuple[int, int]:
    """Recover the ``(z_exp, x_exp)`` pad that turned ``initial`` into ``measured``."""
    return _INFER[(initial, measured)]


def table_label(z_exp: int, x_exp: int) -> str:
    """Row label in the ``x z`` order used by the Bell-state key table (``"10"`` is X)."""
    return f"{x_exp}{z_exp}"
