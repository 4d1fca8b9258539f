from dataclasses import replace

import numpy as np
import pytest

from aqsim.adversary import FlipBellRecord, SubstituteBlock, WithholdR
from aqsim.protocol import (ALICE, ARBITRATOR, BOB, ConfigError, DisputeError, ImprovedRun, LiBellRun,
                            Outcome, PartyState, Ruling, RunConfig, ZouRun, resolve_dispute, run_improved,
                            run_li_bell, run_zou, state_compare)
from aqsim.qotp import Key, qotp_encrypt
from aqsim.protocol.zou import apply_r
from aqsim.quantum import RegisterError, StateRegister, random_qubit
from aqsim.serialize import dump_transcript

RUNS = {"li_bell": run_li_bell, "zou": run_zou, "improved": run_improved}
ZERO = np.array([1, 0], dtype=complex)


class TestStateCompare:
    def test_identical_product_states(self):
        reg = StateRegister(0)
        a = [reg.alloc_qubit((0.6, 0.8)), reg.alloc_qubit((1, 1j))]
        b = [reg.alloc_qubit((0.6, 0.8)), reg.alloc_qubit((1, 1j))]
        assert state_compare(reg, a, b)
        assert reg.num_live == 4

    def test_bell_half_vs_pure_exact(self):
        reg = StateRegister(0)
        h, _ = reg.make_bell_pair()
        q = reg.alloc_qubit((1, 0))
        assert not state_compare(reg, [h], [q])
        assert not state_compare(reg, [h], ZERO)

    def test_entangled_positions_compared_jointly(self):
        reg = StateRegister(0)
        a = list(reg.make_bell_pair())
        b = list(reg.make_bell_pair())
        assert state_compare(reg, a, b)

    def test_length_mismatch(self):
        reg = StateRegister(0)
        with pytest.raises(RegisterError):
            state_compare(reg, [reg.alloc_qubit((1, 0))], [])

    def test_swap_test_needs_copies(self):
        reg = StateRegister(0)
        a = [reg.alloc_qubit((1, 0))]
        with pytest.raises(RegisterError):
            state_compare(reg, a, ZERO, "swap_test", trials=4, copies=[a])
        with pytest.raises(RegisterError):
            state_compare(reg, a, ZERO, "swap_test", trials=1)

    def test_swap_test_equal_states_always_pass(self):
        reg = StateRegister(3)
        copies = [[reg.alloc_qubit((0.6, 0.8j))] for _ in range(32)]
        assert state_compare(reg, copies[0], np.array([0.6, 0.8j]), "swap_test", trials=32, copies=copies)

    def test_swap_test_detection_over_16_trials(self):
        # each trial passes w.p. 1/2 + Tr(rho sigma)/2 = 3/4
        expected = 1 - 0.75 ** 16
        runs, detected = 600, 0
        for seed in range(runs):
            reg = StateRegister(seed)
            copies = [[reg.make_bell_pair()[0]] for _ in range(16)]
            if not state_compare(reg, copies[0], ZERO, "swap_test", trials=16, copies=copies):
                detected += 1
        assert abs(detected / runs - expected) < 0.02


class TestLi:
    def test_honest_n3(self):
        t = run_li_bell(RunConfig(n=3, seed=11))
        assert t.outcome is Outcome.ACCEPTED
        assert t.verdicts == {"V": 1}
        assert t.recovered_message_fidelity >= 1 - 1e-9
        assert [m.step for m in t.messages] == ["S5", "V1", "V3"]

    def test_arbitrator_sees_substituted_r_a(self):
        n = 3
        sub = SubstituteBlock("V1", "S", party=ARBITRATOR, qubits=slice(2 * n, None))
        t = run_li_bell(RunConfig(n=n, seed=2, strategies=[sub]))
        assert t.verdicts["V"] == 0
        assert (t.outcome, t.halted_at) == (Outcome.REJECTED, "V4")
        assert t.record is None

    @pytest.mark.parametrize("pair", [0, 1, 2])
    def test_corrupted_bell_record_fails_v5(self, pair):
        t = run_li_bell(RunConfig(n=3, seed=5, strategies=[FlipBellRecord(pair)]))
        assert t.verdicts["V"] == 1
        assert (t.outcome, t.halted_at) == (Outcome.REJECTED, "V5")
        assert t.recovered_message_fidelity < 1 - 1e-6

    def test_non_commutative_signing_mode(self):
        t = run_li_bell(RunConfig(n=2, seed=1, signing_mode="non_commutative"))
        assert t.accepted

    def test_key_layout(self):
        run = LiBellRun(RunConfig(n=3))
        assert len(run.keys["K_A"]) == 3 + 18
        assert len(run.keys["K_B"]) == 24 + 38
        t = run.execute()
        uses = {(u.party, u.step): (u.offset, u.length) for u in t.key_uses if u.key == "K_B"}
        assert uses[(BOB, "V1")] == (0, 24)
        assert uses[(BOB, "V4")] == (24, 38)


class TestZou:
    def test_honest(self):
        t = run_zou(RunConfig(n=4, seed=7))
        assert t.accepted
        assert t.verdicts == {"V_T": 1, "V_B": 1}
        assert t.recovered_message_fidelity >= 1 - 1e-9
        assert [p.name for p in t.board] == ["V_T", "V_B", "r"]

    def test_bob_substitutes_p_prime(self):
        t = run_zou(RunConfig(n=4, seed=3, strategies=[SubstituteBlock("V1", "P'")]))
        assert t.verdicts == {"V_T": 0}
        assert (t.outcome, t.halted_at) == (Outcome.ABORTED, "V2")

    def test_r_withheld(self):
        t = run_zou(RunConfig(n=4, seed=3, strategies=[WithholdR()]))
        assert (t.outcome, t.halted_at) == (Outcome.ABORTED, "V4")
        assert t.record is None
        assert "r" not in {p.name for p in t.board}

    def test_return_pad_is_fresh(self):
        t = run_zou(RunConfig(n=2, seed=0))
        k_b = [(u.party, u.step, u.offset) for u in t.key_uses if u.key == "K_B"]
        assert k_b == [(BOB, "V1", 0), (ARBITRATOR, "V2", 0), (ARBITRATOR, "V2", 8), (BOB, "V3", 8)]

    def test_returned_blocks(self):
        t = run_zou(RunConfig(n=2, seed=0))
        back = [m for m in t.messages if m.step == "V2"][0]
        assert set(back.blocks) == {"P'", "S_A"}


class TestImproved:
    def test_honest(self):
        t = run_improved(RunConfig(n=4, seed=7))
        assert t.accepted and t.verdicts == {"V_T": 1, "V_B": 1}
        assert len(t.record.signatures) == 2

    def test_probe_halves_caught_before_arbitrator(self):
        from aqsim.adversary import KeyExtraction
        t = run_improved(RunConfig(n=4, seed=1, strategies=[KeyExtraction()]))
        assert (t.outcome, t.halted_at) == (Outcome.ABORTED, "V1")
        assert all(m.receiver != ARBITRATOR for m in t.messages)

    def test_channel_disturbs_returned_copy(self):
        from aqsim.adversary import GaoDisturbance
        g = GaoDisturbance()
        g.party = "Channel"
        t = run_improved(RunConfig(n=4, seed=2, strategies=[g]))
        assert t.verdicts["V_B"] == 0
        assert (t.outcome, t.halted_at) == (Outcome.REJECTED, "V3")

    def test_four_copies(self):
        t = run_improved(RunConfig(n=3, seed=0))
        assert set(t.messages[0].blocks) == {"P'", "R_AB", "S_A1", "S_A2"}
        assert len(ImprovedRun(RunConfig(n=3)).keys["r"]) == 9


class TestDispute:
    @pytest.mark.parametrize("proto", ["zou", "improved"])
    def test_genuine_record(self, proto):
        t = RUNS[proto](RunConfig(n=4, seed=9))
        assert resolve_dispute(t.record, t.parties[ARBITRATOR]) is Ruling.SIGNATURE_VALID
        # arbitration leaves the record usable
        assert resolve_dispute(t.record, t.parties[ARBITRATOR]) is Ruling.SIGNATURE_VALID

    def test_swap_test_mode(self):
        t = run_zou(RunConfig(n=3, seed=4, compare_mode="swap_test", swap_trials=8))
        assert t.accepted
        assert resolve_dispute(t.record, t.parties[ARBITRATOR]) is Ruling.SIGNATURE_VALID

    def test_substituted_signature(self):
        t = run_zou(RunConfig(n=4, seed=9))
        rec, arb = t.record, t.parties[ARBITRATOR]
        reg, rng = rec.register, np.random.default_rng(0)
        other = [reg.alloc_qubit(random_qubit(rng), owner=ALICE) for _ in range(4)]
        apply_r(reg, rec.r, other, improved=False)
        qotp_encrypt(reg, arb.key("K_A"), other)
        forged = replace(rec, signatures=[other])
        assert resolve_dispute(forged, arb) is Ruling.SIGNATURE_INVALID

    def test_wrong_r(self):
        invalid = 0
        for seed in range(50):
            t = run_zou(RunConfig(n=4, seed=seed))
            wrong = Key.random(8, np.random.default_rng(1000 + seed), "r")
            if wrong == t.record.r:
                continue
            if resolve_dispute(replace(t.record, r=wrong), t.parties[ARBITRATOR]) is Ruling.SIGNATURE_INVALID:
                invalid += 1
        assert invalid >= 50 * (1 - 2 ** -4) - 1

    def test_missing_r(self):
        t = run_li_bell(RunConfig(n=2, seed=0))
        with pytest.raises(DisputeError):
            resolve_dispute(t.record, PartyState(ARBITRATOR))
        z = run_zou(RunConfig(n=2, seed=0))
        with pytest.raises(DisputeError):
            resolve_dispute(replace(z.record, r=None), z.parties[ARBITRATOR])

    def test_needs_arbitrator_key(self):
        t = run_zou(RunConfig(n=2, seed=0))
        with pytest.raises(PermissionError):
            resolve_dispute(t.record, t.parties[BOB])


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"n": 0}, {"n": -1}, {"n": True}, {"compare_mode": "fuzzy"},
        {"compare_mode": "swap_test", "swap_trials": 0}, {"signing_mode": "x"},
        {"n": 2, "message": [(1, 0)]}, {"n": 1, "message": [(0, 0)]}, {"tolerance": 1.5},
    ])
    def test_rejected_before_allocation(self, kw):
        with pytest.raises(ConfigError):
            ZouRun(RunConfig(**kw))

    def test_explicit_message(self):
        t = run_zou(RunConfig(n=2, seed=0, message=[(1, 0), (1, 1j)]))
        assert t.accepted and t.recovered_message_fidelity >= 1 - 1e-9

    def test_key_permissions(self):
        run = ZouRun(RunConfig(n=2))
        assert set(run.alice.keys) == {"K_A", "K_AB", "r"}
        assert set(run.bob.keys) == {"K_B", "K_AB"}
        assert set(run.arbitrator.keys) == {"K_A", "K_B"}
        with pytest.raises(PermissionError):
            run.bob.key("K_A")


class TestInvariants:
    @pytest.mark.parametrize("proto", sorted(RUNS))
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_honest_completeness(self, proto, n):
        for seed in range(50):
            t = RUNS[proto](RunConfig(n=n, seed=seed))
            assert t.accepted, (proto, n, seed, t.halted_at)
            assert all(v == 1 for v in t.verdicts.values())
            assert t.recovered_message_fidelity >= 1 - 1e-9

    @pytest.mark.parametrize("strategy", [
        lambda: SubstituteBlock("V1", "P'"), WithholdR, lambda: FlipBellRecord(0),
    ])
    @pytest.mark.parametrize("proto", sorted(RUNS))
    def test_verdict_consistency(self, proto, strategy):
        for seed in range(5):
            t = RUNS[proto](RunConfig(n=2, seed=seed, strategies=[strategy()]))
            if t.accepted:
                assert all(v == 1 for v in t.verdicts.values())
                assert t.record is not None
            else:
                assert t.record is None

    @pytest.mark.parametrize("proto", ["zou", "improved"])
    def test_no_key_material_on_board(self, proto):
        for seed in range(20):
            run = {"zou": ZouRun, "improved": ImprovedRun}[proto](RunConfig(n=8, seed=seed))
            t = run.execute()
            posted = " ".join(str(p.value) for p in t.board)
            assert {p.name for p in t.board} <= {"V_T", "V_B", "r"}
            for label in ("K_A", "K_B", "K_AB"):
                key = run.keys[label]
                assert key.hex() not in posted
                assert key.bits not in posted

    @pytest.mark.parametrize("proto", sorted(RUNS))
    def test_determinism(self, proto):
        a = dump_transcript(RUNS[proto](RunConfig(n=3, seed=42)))
        b = dump_transcript(RUNS[proto](RunConfig(n=3, seed=42)))
        c = dump_transcript(RUNS[proto](RunConfig(n=3, seed=43)))
        assert a == b
        assert a != c

    @pytest.mark.parametrize("proto", ["zou", "improved"])
    def test_dispute_soundness(self, proto):
        for seed in range(50):
            t = RUNS[proto](RunConfig(n=4, seed=seed))
            assert resolve_dispute(t.record, t.parties[ARBITRATOR]) is Ruling.SIGNATURE_VALID
