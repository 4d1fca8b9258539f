from .dispute import DisputeError, Ruling, resolve_dispute
from .engine import (ALICE, ARBITRATOR, BOB, BoardPost, ChannelMessage, ConfigError, KeyUse,
                     MessageRecord, Outcome, PartyState, ProtocolRun, PublicBoard, RunConfig,
                     SignatureRecord, Strategy, TapContext, Transcript, state_compare)
from .li import LiBellRun, run_li_bell
from .zou import ImprovedRun, ZouRun, apply_r, run_improved, run_zou

RUNNERS = {"li_bell": LiBellRun, "zou": ZouRun, "improved": ImprovedRun}

__all__ = [
    "ALICE", "ARBITRATOR", "BOB", "BoardPost", "ChannelMessage", "ConfigError", "DisputeError",
    "ImprovedRun", "KeyUse", "LiBellRun", "MessageRecord", "Outcome", "PartyState", "ProtocolRun",
    "PublicBoard", "RUNNERS", "Ruling", "RunConfig", "SignatureRecord", "Strategy", "TapContext",
    "Transcript", "ZouRun", "apply_r", "resolve_dispute", "run_improved", "run_li_bell", "run_zou",
    "state_compare",
]
