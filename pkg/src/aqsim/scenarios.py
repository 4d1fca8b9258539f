"""Named, reproducible scenarios with built-in expected outcomes."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from . import adversary
from .protocol import RUNNERS, ConfigError, Ruling, RunConfig, resolve_dispute
from .serialize import dump_report, dump_transcript

PROTOCOLS = ("li_bell", "zou", "improved")
FIDELITY_TOL = 1e-9


@dataclass
class ScenarioConfig:
    scenario: str = "honest"
    protocol: str = "zou"
    n: int = 4
    seed: int = 0
    compare_mode: str = "exact"
    swap_trials: int = 16
    output_path: str | None = None
    message: str | Sequence[Sequence[Any]] = "random"

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        spec = SCENARIOS[self.scenario]
        if self.protocol not in spec.protocols:
            raise ConfigError(f"scenario {self.scenario!r} supports {', '.join(spec.protocols)}, "
                              f"not {self.protocol!r}")
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if self.compare_mode == "swap_test" and self.swap_trials < 1:
            raise ConfigError("swap_trials must be >= 1 in swap_test mode")

    def run_config(self) -> RunConfig:
        cfg = RunConfig(n=self.n, seed=self.seed, message=parse_message(self.message),
                        compare_mode=self.compare_mode, swap_trials=self.swap_trials)
        cfg.validate()
        return cfg


def parse_message(spec) -> list[tuple[complex, complex]] | None:
    """``"random"`` or a list of ``[alpha, beta]`` pairs (numbers or strings like ``"0.8j"``)."""
    if spec is None or spec == "random":
        return None
    if isinstance(spec, str):
        raise ConfigError(f"message must be 'random' or a list of amplitude pairs, got {spec!r}")
    out = []
    for pair in spec:
        try:
            a, b = (complex(str(x).replace(" ", "")) for x in pair)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad amplitude pair {pair!r}") from exc
        out.append((a, b))
    return out


@dataclass
class ScenarioResult:
    summary: dict[str, Any]
    document: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary_line(self) -> str:
        return " ".join(f"{k}={_fmt(v)}" for k, v in self.summary.items())


def _fmt(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9f}"
    return str(v)


def _transcript_summary(cfg: ScenarioConfig, t) -> dict[str, Any]:
    s: dict[str, Any] = {"scenario": cfg.scenario, "protocol": cfg.protocol, "n": cfg.n, "seed": cfg.seed,
                         "outcome": t.outcome.value}
    s.update(t.verdicts)
    s["fidelity"] = t.recovered_message_fidelity
    s["detected_at"] = None if t.accepted else t.halted_at
    return s


def _expect(failures: list[str], cond: bool, what: str) -> None:
    if not cond:
        failures.append(what)


def _honest(cfg: ScenarioConfig) -> ScenarioResult:
    t = RUNNERS[cfg.protocol](cfg.run_config()).execute()
    failures: list[str] = []
    _expect(failures, t.accepted, f"outcome {t.outcome.value} != accepted")
    _expect(failures, all(v == 1 for v in t.verdicts.values()), f"verdicts {t.verdicts}")
    f = t.recovered_message_fidelity
    _expect(failures, f is not None and f >= 1 - FIDELITY_TOL, f"fidelity {f}")
    return ScenarioResult(_transcript_summary(cfg, t), dump_transcript(t), failures)


def _dispute(cfg: ScenarioConfig) -> ScenarioResult:
    t = RUNNERS[cfg.protocol](cfg.run_config()).execute()
    failures: list[str] = []
    summary = _transcript_summary(cfg, t)
    ruling = None
    if t.accepted:
        ruling = resolve_dispute(t.record, t.parties["Arbitrator"]).value
    summary["ruling"] = ruling
    _expect(failures, ruling == Ruling.SIGNATURE_VALID.value, f"ruling {ruling} != signature_valid")
    doc = dump_transcript(t).rstrip("\n") + f"\nruling: {ruling}\n"
    return ScenarioResult(summary, doc, failures)


def _attack_summary(cfg: ScenarioConfig, r) -> dict[str, Any]:
    s = _transcript_summary(cfg, r.transcript)
    s.pop("fidelity")
    s.update({
        "key_bits": f"{r.key_bits_matched}/{r.key_bits_total}" if r.recovered_key_bits else "0/0",
        "key_exact": r.key_recovery_exact,
        "forgery_accepted": r.forgery_accepted,
        "disavowal_upheld": r.disavowal_upheld,
        "detected_at": r.detected_at_step,
    })
    return s


def _attack(fn: Callable, expected: dict[str, dict[str, Any]]):
    def run(cfg: ScenarioConfig) -> ScenarioResult:
        r = fn(cfg.run_config(), target=cfg.protocol)
        failures = [
            f"{k}={getattr(r, k)!r}, expected {v!r}"
            for k, v in expected[cfg.protocol].items() if getattr(r, k) != v
        ]
        return ScenarioResult(_attack_summary(cfg, r), dump_report(r), failures)
    return run


def _withhold(cfg: ScenarioConfig) -> ScenarioResult:
    t = RUNNERS[cfg.protocol](replace(cfg.run_config(), strategies=[adversary.WithholdR()])).execute()
    failures: list[str] = []
    _expect(failures, t.outcome.value == "aborted" and t.halted_at == "V4",
            f"outcome {t.outcome.value} at {t.halted_at}, expected aborted at V4")
    _expect(failures, t.record is None, "signature record stored without r")
    return ScenarioResult(_transcript_summary(cfg, t), dump_transcript(t), failures)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    protocols: tuple[str, ...]
    run: Callable[[ScenarioConfig], ScenarioResult]


_DETECTED_V1 = {"key_recovery_exact": False, "forgery_accepted": False, "detected_at_step": "V1"}

SCENARIOS: dict[str, Scenario] = {s.name: s for s in sorted([
    Scenario("honest", "all parties honest; expect acceptance with every verdict 1", PROTOCOLS, _honest),
    Scenario("dispute", "honest run followed by arbitration of the stored signature",
             ("zou", "improved"), _dispute),
    Scenario("key-extraction", "Alice swaps P' for Bell halves, learns Bob's pad, then disavows",
             ("zou", "improved"),
             _attack(adversary.key_extraction_attack_zou, {
                 "zou": {"key_recovery_exact": True, "disavowal_upheld": True, "detected_at_step": None},
                 "improved": _DETECTED_V1,
             })),
    Scenario("total-break", "Alice recovers Bob's whole pad and gets a message of her choice accepted",
             ("li_bell", "improved"),
             _attack(adversary.total_break_attack_li, {
                 "li_bell": {"key_recovery_exact": True, "forgery_accepted": True, "detected_at_step": None},
                 "improved": _DETECTED_V1,
             })),
    Scenario("gao-disturbance", "Alice disturbs the returned S_A so the signature fails arbitration",
             ("zou", "improved"),
             _attack(adversary.gao_disturbance_attack, {
                 "zou": {"disavowal_upheld": True, "detected_at_step": None},
                 "improved": {"disavowal_upheld": False, "detected_at_step": "V3"},
             })),
    Scenario("withhold-r", "Alice never publishes r; the run must abort at V4",
             ("zou", "improved"), _withhold),
], key=lambda s: s.name)}


def list_scenarios(filter_text: str = "") -> list[tuple[str, str]]:
    return [(s.name, s.description) for s in SCENARIOS.values() if filter_text in s.name]


def run_scenario(cfg: ScenarioConfig, out: Path | None = None) -> ScenarioResult:
    cfg.validate()
    result = SCENARIOS[cfg.scenario].run(cfg)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(result.document, encoding="utf-8")
    return result
