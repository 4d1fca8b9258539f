import inspect

import pytest

from aqsim import adversary
from aqsim.adversary import (GaoDisturbance, KeyExtraction, TotalBreak, gao_disturbance_attack,
                             key_extraction_attack_zou, total_break_attack_li)
from aqsim.protocol import (ALICE, ARBITRATOR, BOB, ConfigError, PartyState, RunConfig, Strategy,
                            run_li_bell)
from aqsim.qotp import infer_key_pair, qotp_encrypt, Key, table_label
from aqsim.quantum import BellKind, StateRegister


class TestKeyExtraction:
    def test_zou_n4(self):
        r = key_extraction_attack_zou(RunConfig(n=4, seed=0))
        assert r.key_bits_total == 8 and len(r.recovered_key_bits) == 8
        assert r.key_recovery_exact
        assert r.transcript.accepted
        assert r.transcript.verdicts == {"V_T": 1, "V_B": 1}
        assert r.ruling == "signature_invalid" and r.disavowal_upheld
        assert r.detected_at_step is None

    def test_single_pair_bit_flip(self):
        # a pad of sigma_x on T turns phi+ into psi+, read back as "10"
        reg = StateRegister(0)
        t, h = reg.make_bell_pair()
        qotp_encrypt(reg, Key("01"), [t])
        kind = reg.bell_measure(t, h)
        assert kind is BellKind.PSI_PLUS
        assert table_label(*infer_key_pair(BellKind.PHI_PLUS, kind)) == "10"

    def test_labels_follow_recovered_bits(self):
        r = key_extraction_attack_zou(RunConfig(n=4, seed=3))
        bits = r.recovered_key_bits
        assert r.details["table_labels"] == [bits[i + 1] + bits[i] for i in range(0, 8, 2)]

    def test_improved_detected_at_v1(self):
        r = key_extraction_attack_zou(RunConfig(n=4, seed=0), target="improved")
        assert r.detected_at_step == "V1"
        assert not r.forgery_accepted and not r.key_recovery_exact
        assert r.recovered_key_bits == ""

    def test_bad_target(self):
        with pytest.raises(ConfigError):
            key_extraction_attack_zou(RunConfig(), target="li_bell")


class TestTotalBreak:
    def test_li_n2(self):
        r = total_break_attack_li(RunConfig(n=2, seed=0))
        assert r.key_bits_total == 16 and r.key_recovery_exact
        assert r.forgery_accepted
        assert r.transcript.verdicts == {"V": 1}
        assert r.details["bob_message_fidelity_to_forged"] >= 1 - 1e-9

    def test_orthogonal_forgery_accepted(self):
        r = total_break_attack_li(RunConfig(n=3, seed=5), forged="orthogonal")
        assert r.forgery_accepted
        # Bob ends up with a message orthogonal to the one Alice started from
        assert r.transcript.recovered_message_fidelity < 1e-9

    def test_random_forgery_accepted(self):
        r = total_break_attack_li(RunConfig(n=3, seed=5), forged="random")
        assert r.forgery_accepted and r.key_recovery_exact

    def test_honest_control(self):
        t = run_li_bell(RunConfig(n=2, seed=0))
        assert t.accepted
        assert all(not m.tampered_by for m in t.messages)

    def test_improved_detected_at_v1(self):
        r = total_break_attack_li(RunConfig(n=2, seed=0), target="improved")
        assert r.detected_at_step == "V1" and not r.forgery_accepted

    def test_unknown_forgery(self):
        with pytest.raises(ValueError):
            TotalBreak("anything")


class TestGao:
    def test_zou_disavowal(self):
        r = gao_disturbance_attack(RunConfig(n=4, seed=0))
        assert r.transcript.accepted
        assert r.ruling == "signature_invalid" and r.disavowal_upheld
        assert all(w != "00" for w in r.details["disturbance"])

    def test_improved_detected_v3(self):
        r = gao_disturbance_attack(RunConfig(n=4, seed=0), target="improved")
        assert r.transcript.verdicts["V_B"] == 0
        assert r.detected_at_step == "V3" and not r.disavowal_upheld

    @pytest.mark.parametrize("target", ["zou", "improved"])
    def test_identity_is_no_attack(self, target):
        r = gao_disturbance_attack(RunConfig(n=4, seed=0), target=target, identity=True)
        assert r.transcript.accepted and r.ruling == "signature_valid"
        assert r.detected_at_step is None


class TestInvariants:
    def test_key_extraction_100(self):
        for seed in range(100):
            r = key_extraction_attack_zou(RunConfig(n=4, seed=seed))
            assert r.key_recovery_exact and r.disavowal_upheld, seed
            assert len(r.recovered_key_bits) == r.key_bits_total

    def test_total_break_100(self):
        for seed in range(100):
            r = total_break_attack_li(RunConfig(n=2, seed=seed))
            assert r.key_recovery_exact and r.forgery_accepted, seed

    @pytest.mark.parametrize("attack", [key_extraction_attack_zou, total_break_attack_li])
    def test_improved_always_catches_substitution(self, attack):
        for seed in range(100):
            r = attack(RunConfig(n=4, seed=seed), target="improved")
            assert r.detected_at_step == "V1", seed

    def test_gao_improved_always_detected(self):
        for seed in range(100):
            r = gao_disturbance_attack(RunConfig(n=4, seed=seed), target="improved")
            assert r.detected_at_step == "V3", seed

    def test_exact_implies_full_length(self):
        for seed in range(20):
            for r in (key_extraction_attack_zou(RunConfig(n=3, seed=seed)),
                      total_break_attack_li(RunConfig(n=1, seed=seed))):
                if r.key_recovery_exact:
                    assert len(r.recovered_key_bits) == r.key_bits_total
                    assert r.key_bits_matched == r.key_bits_total


class _Spy:
    """Records every PartyState.key lookup made from inside a strategy method."""

    def __init__(self, monkeypatch):
        self.calls: list[tuple[str, str, str]] = []
        original = PartyState.key
        spy = self

        def key(state, label):
            for frame in inspect.stack()[1:]:
                owner = frame.frame.f_locals.get("self")
                if isinstance(owner, Strategy):
                    spy.calls.append((owner.party, state.name, label))
                    break
            return original(state, label)

        monkeypatch.setattr(PartyState, "key", key)


class TestInformationFlow:
    @pytest.mark.parametrize("run", [
        lambda: key_extraction_attack_zou(RunConfig(n=3, seed=1)),
        lambda: key_extraction_attack_zou(RunConfig(n=3, seed=1), target="improved"),
        lambda: total_break_attack_li(RunConfig(n=2, seed=1)),
        lambda: gao_disturbance_attack(RunConfig(n=3, seed=1)),
    ])
    def test_strategies_only_read_own_keys(self, monkeypatch, run):
        spy = _Spy(monkeypatch)
        run()
        assert all(party == owner for party, owner, _ in spy.calls), spy.calls

    @pytest.mark.parametrize("cls", [KeyExtraction, TotalBreak, GaoDisturbance])
    def test_context_holds_only_alice(self, cls):
        from aqsim.protocol import ZouRun, LiBellRun
        s = cls()
        runner = LiBellRun if cls is TotalBreak else ZouRun
        run = runner(RunConfig(n=2, seed=0, strategies=[s]))
        assert s.ctx.party is run.parties[ALICE]
        others = (run.parties[BOB], run.parties[ARBITRATOR])
        reachable = list(vars(s).values()) + list(vars(s.ctx).values())
        assert not any(v is o for v in reachable for o in others)
        assert "K_B" not in s.ctx.party.keys

    def test_bob_side_strategy_gets_no_message(self):
        from aqsim.adversary import SubstituteBlock
        from aqsim.protocol import ZouRun
        s = SubstituteBlock("V1", "P'")
        ZouRun(RunConfig(n=2, seed=0, strategies=[s]))
        assert s.ctx.message is None and s.ctx.party.name == BOB

    def test_module_never_touches_run_keys_inside_strategies(self):
        for cls in (KeyExtraction, TotalBreak, GaoDisturbance, adversary._BellProbe):
            src = inspect.getsource(cls)
            assert ".keys[" not in src and "parties[" not in src
