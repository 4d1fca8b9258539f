"""Exact pure-state simulation of qubits grouped into entanglement classes.

Qubits that have never interacted live in separate classes, each storing a
small complex tensor of shape ``(2,) * k``.  Joint operations merge the
classes involved; measurements remove the measured axes again.  Qubits that
are discarded while still entangled stay in their class as untracked axes, so
reduced states of the remaining qubits are unaffected.

Global phase is kept exactly in the stored tensors but never influences
measurement probabilities or fidelities.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SQRT1_2 = 1 / np.sqrt(2)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2
I2 = np.eye(2, dtype=complex)

NORM_INPUT_TOL = 1e-9
NORM_TOL = 1e-12


class RegisterError(ValueError):
    """Invalid use of a :class:`StateRegister` (dead handle, bad shape, ...)."""


class BellKind(enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"

    @property
    def vector(self) -> np.ndarray:
        return _BELL_VECTORS[self].copy()

    def __str__(self) -> str:
        return self.value


_BELL_VECTORS = {
    BellKind.PHI_PLUS: np.array([1, 0, 0, 1], dtype=complex) * SQRT1_2,
    BellKind.PHI_MINUS: np.array([1, 0, 0, -1], dtype=complex) * SQRT1_2,
    BellKind.PSI_PLUS: np.array([0, 1, 1, 0], dtype=complex) * SQRT1_2,
    BellKind.PSI_MINUS: np.array([0, 1, -1, 0], dtype=complex) * SQRT1_2,
}
BELL_ORDER = tuple(BellKind)
_BELL_BASIS = np.stack([_BELL_VECTORS[k] for k in BELL_ORDER])

_PHASES = (1, -1, 1j, -1j)


@dataclass(frozen=True)
class PauliWord:
    """The single-qubit operator ``phase * X**x_exp @ Z**z_exp``.

    ``Z`` acts first, then ``X``.  Products track the sign picked up when an
    ``X`` is commuted past a ``Z``.
    """

    x_exp: int = 0
    z_exp: int = 0
    phase: complex = 1

    def __post_init__(self):
        if self.x_exp not in (0, 1) or self.z_exp not in (0, 1):
            raise ValueError("Pauli exponents must be 0 or 1")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}, got {self.phase!r}")

    @property
    def matrix(self) -> np.ndarray:
        m = I2
        if self.z_exp:
            m = Z @ m
        if self.x_exp:
            m = X @ m
        return self.phase * m

    @property
    def is_identity(self) -> bool:
        """True when the word is the identity up to global phase."""
        return not (self.x_exp or self.z_exp)

    def __matmul__(self, other: PauliWord) -> PauliWord:
        # (X^a Z^b)(X^c Z^d) = (-1)^(b c) X^(a+c) Z^(b+d)
        sign = -1 if (self.z_exp and other.x_exp) else 1
        phase = complex(self.phase * other.phase * sign)
        phase = complex(round(phase.real), round(phase.imag))
        return PauliWord(self.x_exp ^ other.x_exp, self.z_exp ^ other.z_exp, phase)

    def label(self) -> str:
        """Two-character label written as ``x_exp z_exp`` (``"10"`` is a bit flip)."""
        return f"{self.x_exp}{self.z_exp}"


IDENTITY = PauliWord()
SIGMA_X = PauliWord(x_exp=1)
SIGMA_Z = PauliWord(z_exp=1)


@dataclass(frozen=True)
class QubitHandle:
    id: int
    owner: str = "Channel"

    def __repr__(self) -> str:
        return f"q{self.id}"


class _Class:
    __slots__ = ("qubits", "state")

    def __init__(self, qubits: list[int], state: np.ndarray):
        self.qubits = qubits
        self.state = state


def teleport_correction(kind: BellKind) -> PauliWord:
    """Pauli word returning the remote half of a teleportation to the input state.

    Bell-measuring ``(message, own half of |phi+>)`` with outcome ``kind``
    leaves the remote half in ``alpha|0>+beta|1>`` (phi+), ``alpha|0>-beta|1>``
    (phi-), ``alpha|1>+beta|0>`` (psi+) or ``alpha|1>-beta|0>`` (psi-).
    """
    return _CORRECTIONS[kind]


# psi- needs Z X == -X Z
_CORRECTIONS = {
    BellKind.PHI_PLUS: IDENTITY,
    BellKind.PHI_MINUS: SIGMA_Z,
    BellKind.PSI_PLUS: SIGMA_X,
    BellKind.PSI_MINUS: PauliWord(x_exp=1, z_exp=1, phase=-1),
}


def random_qubit(rng: np.random.Generator) -> tuple[complex, complex]:
    """Haar-random single-qubit amplitudes."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return complex(v[0]), complex(v[1])


class StateRegister:
    """Pool of qubits partitioned into entanglement classes.

    All operations mutate the register in place and are not thread safe;
    separate protocol runs should use separate registers.
    """

    def __init__(self, seed: int | Sequence[int] | None = 0):
        self.rng_seed = seed
        self.rng = np.random.default_rng(seed)
        self._classes: dict[int, _Class] = {}
        self._where: dict[int, int] = {}  # live qubit id -> class id
        self._next_handle = 0
        self._next_class = 0

    # -- bookkeeping -----------------------------------------------------

    def _new_ids(self, k: int) -> list[int]:
        ids = list(range(self._next_handle, self._next_handle + k))
        self._next_handle += k
        return ids

    def _add_class(self, qubits: list[int], state: np.ndarray, live: Iterable[int] | None = None) -> int:
        cid = self._next_class
        self._next_class += 1
        self._classes[cid] = _Class(qubits, state)
        for q in qubits if live is None else live:
            self._where[q] = cid
        return cid

    def _cid(self, handle: QubitHandle) -> int:
        try:
            return self._where[handle.id]
        except KeyError:
            raise RegisterError(f"dead or unknown qubit handle {handle!r}") from None

    def class_id(self, handle: QubitHandle) -> int:
        return self._cid(handle)

    def is_live(self, handle: QubitHandle) -> bool:
        return handle.id in self._where

    @property
    def num_live(self) -> int:
        return len(self._where)

    @property
    def num_classes(self) -> int:
        return len(self._classes)

    def class_sizes(self) -> list[int]:
        return [len(c.qubits) for c in self._classes.values()]

    def _merge(self, handles: Sequence[QubitHandle]) -> _Class:
        cids = list(dict.fromkeys(self._cid(h) for h in handles))
        if len(cids) == 1:
            return self._classes[cids[0]]
        base = self._classes[cids[0]]
        for cid in cids[1:]:
            other = self._classes.pop(cid)
            base.state = np.multiply.outer(base.state, other.state)
            base.qubits = base.qubits + other.qubits
            for q in other.qubits:
                if q in self._where:
                    self._where[q] = cids[0]
        return base

    def _axis(self, cls: _Class, handle: QubitHandle) -> int:
        return cls.qubits.index(handle.id)

    def _drop_axes(self, cls: _Class, cid: int, axes_to_drop: list[int], reduced: np.ndarray) -> None:
        keep = [q for i, q in enumerate(cls.qubits) if i not in axes_to_drop]
        if not keep or not any(q in self._where for q in keep):
            for q in keep:
                self._where.pop(q, None)
            del self._classes[cid]
            return
        norm = np.linalg.norm(reduced)
        cls.qubits = keep
        cls.state = (reduced / norm).reshape((2,) * len(keep))

    # -- allocation --------------------------------------------------------

    def alloc_qubit(self, amplitudes: tuple[complex, complex], owner: str = "Channel") -> QubitHandle:
        v = np.asarray(amplitudes, dtype=complex).reshape(2)
        norm = np.linalg.norm(v)
        if norm < NORM_INPUT_TOL:
            raise RegisterError("degenerate amplitude pair")
        if abs(norm - 1) > NORM_INPUT_TOL:
            v = v / norm
        (q,) = self._new_ids(1)
        self._add_class([q], v.copy())
        return QubitHandle(q, owner)

    def alloc_state(self, vector: np.ndarray, owner: str = "Channel") -> list[QubitHandle]:
        """Allocate qubits jointly holding ``vector`` (first qubit most significant)."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        k = int(np.log2(v.size)) if v.size else 0
        if v.size < 2 or 2**k != v.size:
            raise RegisterError("state vector length must be a power of two")
        norm = np.linalg.norm(v)
        if norm < NORM_INPUT_TOL:
            raise RegisterError("degenerate state vector")
        ids = self._new_ids(k)
        self._add_class(ids, (v / norm).reshape((2,) * k))
        return [QubitHandle(q, owner) for q in ids]

    def make_bell_pair(self, kind: BellKind = BellKind.PHI_PLUS, owner: str = "Channel") -> tuple[QubitHandle, QubitHandle]:
        a, b = self.alloc_state(kind.vector, owner)
        return a, b

    def clone(self, handles: Sequence[QubitHandle], owner: str | None = None) -> list[QubitHandle]:
        """Fresh qubits in the same joint state as ``handles`` (entanglement partners included).

        Not a physical operation: it stands in for a sender preparing extra
        copies of the same state.
        """
        mapping: dict[int, int] = {}
        for cid in dict.fromkeys(self._cid(h) for h in handles):
            cls = self._classes[cid]
            new = self._new_ids(len(cls.qubits))
            live = [n for q, n in zip(cls.qubits, new) if q in self._where]
            self._add_class(new, cls.state.copy(), live=live)
            mapping.update(zip(cls.qubits, new))
        return [QubitHandle(mapping[h.id], owner or h.owner) for h in handles]

    def discard(self, handles: Iterable[QubitHandle]) -> None:
        """Stop tracking qubits; their classes vanish once nothing in them is live."""
        for h in handles:
            cid = self._where.pop(h.id, None)
            if cid is None:
                continue
            cls = self._classes[cid]
            if not any(q in self._where for q in cls.qubits):
                del self._classes[cid]

    # -- gates -------------------------------------------------------------

    def apply_unitary(self, handles: Sequence[QubitHandle], matrix: np.ndarray) -> None:
        """Apply a ``2**k x 2**k`` unitary to the listed qubits (first = most significant)."""
        k = len(handles)
        if len({h.id for h in handles}) != k:
            raise RegisterError("repeated qubit handle")
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2**k, 2**k):
            raise RegisterError(f"expected a {2**k}x{2**k} matrix, got {m.shape}")
        cls = self._merge(handles)
        axes = [self._axis(cls, h) for h in handles]
        t = m.reshape((2,) * (2 * k))
        out = np.tensordot(t, cls.state, axes=(list(range(k, 2 * k)), axes))
        cls.state = np.ascontiguousarray(np.moveaxis(out, list(range(k)), axes))

    def apply_pauli(self, handle: QubitHandle, word: PauliWord) -> None:
        cls = self._classes[self._cid(handle)]
        ax = self._axis(cls, handle)
        s = cls.state
        if word.z_exp:
            idx = (slice(None),) * ax + (1,)
            s[idx] *= -1
        if word.x_exp:
            s = np.flip(s, axis=ax).copy()
        if word.phase != 1:
            s = s * word.phase
        cls.state = s

    def apply_h(self, handle: QubitHandle) -> None:
        self.apply_unitary([handle], H)

    # -- measurement -------------------------------------------------------

    def _sample(self, probs: np.ndarray) -> int:
        total = probs.sum()
        u = self.rng.random() * total
        return int(min(np.searchsorted(np.cumsum(probs), u, side="right"), len(probs) - 1))

    def measure(self, handle: QubitHandle) -> int:
        """Computational-basis measurement; consumes the qubit."""
        cid = self._cid(handle)
        cls = self._classes[cid]
        ax = self._axis(cls, handle)
        m = np.moveaxis(cls.state, ax, 0).reshape(2, -1)
        probs = np.sum(np.abs(m) ** 2, axis=1)
        outcome = self._sample(probs)
        del self._where[handle.id]
        self._drop_axes(cls, cid, [ax], m[outcome])
        return outcome

    def bell_measure(self, h1: QubitHandle, h2: QubitHandle) -> BellKind:
        """Projective Bell-basis measurement of ``(h1, h2)``; consumes both qubits."""
        if h1.id == h2.id:
            raise RegisterError("bell_measure needs two distinct qubits")
        cls = self._merge([h1, h2])
        cid = self._where[h1.id]
        a1, a2 = self._axis(cls, h1), self._axis(cls, h2)
        m = np.moveaxis(cls.state, [a1, a2], [0, 1]).reshape(4, -1)
        proj = _BELL_BASIS.conj() @ m
        probs = np.sum(np.abs(proj) ** 2, axis=1)
        outcome = self._sample(probs)
        del self._where[h1.id]
        del self._where[h2.id]
        self._drop_axes(cls, cid, [a1, a2], proj[outcome])
        return BELL_ORDER[outcome]

    # -- inspection ----------------------------------------------------------

    def _joint(self, handles: Sequence[QubitHandle]) -> tuple[np.ndarray, list[int]]:
        """Tensor product of all classes touching ``handles`` with the handles' axes first."""
        cids = list(dict.fromkeys(self._cid(h) for h in handles))
        state = None
        qubits: list[int] = []
        for cid in cids:
            cls = self._classes[cid]
            state = cls.state if state is None else np.multiply.outer(state, cls.state)
            qubits += cls.qubits
        axes = [qubits.index(h.id) for h in handles]
        state = np.moveaxis(state, axes, list(range(len(handles))))
        return state, qubits

    def vector(self, handles: Sequence[QubitHandle]) -> np.ndarray:
        """Joint state vector of ``handles``, which must exactly cover their classes."""
        state, qubits = self._joint(handles)
        if len(qubits) != len(handles):
            raise RegisterError("handles are entangled with qubits outside the list")
        return state.reshape(-1).copy()

    def class_of(self, handle: QubitHandle) -> tuple[list[int], np.ndarray]:
        """Member qubit ids and a copy of the flat class vector."""
        cls = self._classes[self._cid(handle)]
        return list(cls.qubits), cls.state.reshape(-1).copy()

    def snapshot(self, handles: Sequence[QubitHandle]) -> list[tuple[list[int], np.ndarray]]:
        out = []
        for cid in dict.fromkeys(self._cid(h) for h in handles):
            cls = self._classes[cid]
            out.append((list(cls.qubits), cls.state.reshape(-1).copy()))
        return out

    def reduced_density(self, handles: Sequence[QubitHandle]) -> np.ndarray:
        state, _ = self._joint(handles)
        m = state.reshape(2 ** len(handles), -1)
        return m @ m.conj().T

    def fidelity(self, handles: Sequence[QubitHandle], reference: np.ndarray) -> float:
        """``<ref| rho |ref>`` for the reduced state of ``handles``; non-destructive."""
        ref = np.asarray(reference, dtype=complex).reshape(-1)
        if ref.size != 2 ** len(handles):
            raise RegisterError(f"reference has dimension {ref.size}, expected {2 ** len(handles)}")
        state, _ = self._joint(handles)
        m = state.reshape(ref.size, -1)
        v = ref.conj() @ m
        return float(min(1.0, max(0.0, np.vdot(v, v).real)))

    def swap_overlap(self, a: Sequence[QubitHandle], b: Sequence[QubitHandle]) -> float:
        """Exact ``Tr(SWAP rho_ab)``; equals ``Tr(rho_a rho_b)`` when a and b are unentangled."""
        if len(a) != len(b):
            raise RegisterError("swap overlap needs equal-length registers")
        k = len(a)
        state, _ = self._joint(list(a) + list(b))
        perm = list(range(k, 2 * k)) + list(range(k)) + list(range(2 * k, state.ndim))
        swapped = np.transpose(state, perm)
        return float(np.vdot(state, swapped).real)

    def check_invariants(self) -> None:
        seen: set[int] = set()
        for cid, cls in self._classes.items():
            if cls.state.shape != (2,) * len(cls.qubits):
                raise AssertionError(f"class {cid} has shape {cls.state.shape}")
            if abs(np.linalg.norm(cls.state) - 1) > NORM_TOL:
                raise AssertionError(f"class {cid} norm drifted")
            for q in cls.qubits:
                if q in self._where:
                    if self._where[q] != cid or q in seen:
                        raise AssertionError(f"qubit {q} misfiled")
                    seen.add(q)
        if seen != set(self._where):
            raise AssertionError("live qubits missing from classes")


def fredkin() -> np.ndarray:
    """Controlled-SWAP on (control, a, b)."""
    m = np.eye(8, dtype=complex)
    m[[5, 6]] = m[[6, 5]]
    return m


def swap_test(register: StateRegister, a: Sequence[QubitHandle], b: Sequence[QubitHandle]) -> bool:
    """One destructive swap test on registers ``a`` and ``b``; True means "same".

    Passes with probability ``(1 + Tr(SWAP rho_ab)) / 2``.  All input qubits are
    discarded afterwards.
    """
    if len(a) != len(b):
        raise RegisterError("swap test needs equal-length registers")
    anc = register.alloc_qubit((1, 0), owner="Comparator")
    register.apply_h(anc)
    cswap = fredkin()
    for qa, qb in zip(a, b):
        register.apply_unitary([anc, qa, qb], cswap)
    register.apply_h(anc)
    outcome = register.measure(anc)
    register.discard(itertools.chain(a, b))
    return outcome == 0
