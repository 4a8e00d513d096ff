"""Two-party state machines for bit commitment and coin tossing.

Runs execute on a continuous event timeline: quantum states enter the
channels at t = 0, each detector outcome occurs at a random light-cone
coordinate, classical disclosure happens at the receiver-chosen time, and
verification fires once the full state extent has become accessible.  All
randomness flows through named substreams split off one seed, so a run is a
pure function of (config, strategies, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable

import numpy as np

from .parity import (
    Secret,
    block_string_parity,
    exact_parity_guesser,
    sample_secret,
)
from .wavepacket import StretchedState, delayed_overlap

__all__ = [
    "AbortReason",
    "AuditError",
    "ProtocolConfig",
    "Honest",
    "DelayBlocks",
    "EarlyGuess",
    "SendBack",
    "HONEST",
    "Event",
    "Transcript",
    "Verdict",
    "EarlyGuessReport",
    "BitCommitmentResult",
    "CoinTossResult",
    "accessible_horizon",
    "run_bit_commitment",
    "run_coin_toss",
    "mirror_guess_acceptance",
    "audit_transcript",
    "transcript_to_jsonl",
]


class AbortReason(str, Enum):
    WRONG_CHANNEL = "WRONG_CHANNEL"
    PERP_OUTCOME = "PERP_OUTCOME"
    SILENT_AT_FULL_ACCESS = "SILENT_AT_FULL_ACCESS"
    BLOCK_MISMATCH = "BLOCK_MISMATCH"
    INCONSISTENT_DISCLOSURE = "INCONSISTENT_DISCLOSURE"


class AuditError(RuntimeError):
    """A transcript violated causality or the disclosure phase ordering."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Agreed parameters of one protocol instance.

    ``width`` is the hump half-width, ``separation`` the front-to-rear hump
    distance, and ``channel_delay`` the light-cone length of the quantum
    channel, which must stay below the state extent so the rear hump is still
    leaving the sender when the front hump arrives.  ``disclosure_time`` is
    the receiver-chosen horizon at which classical disclosure starts and
    defaults to the midpoint of its admissible interval.
    """

    n_blocks: int
    block_len: int
    width: float = 1.0
    separation: float = 8.0
    channel_delay: float = 0.0
    tail_exponent: float | None = None
    disclosure_time: float | None = None
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_blocks < 1 or self.block_len < 1:
            raise ValueError("n_blocks and block_len must be at least 1")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.tail_exponent is None and not self.separation > 2 * self.width:
            raise ValueError("compact mode requires separation > 2 * width")
        if not self.separation > 0:
            raise ValueError("separation must be positive")
        if self.tail_exponent is not None and not self.tail_exponent > 0:
            raise ValueError("tail_exponent must be positive")
        if not 0 <= self.channel_delay < self.separation + 2 * self.width:
            raise ValueError("channel_delay must lie below the state extent")
        if self.disclosure_time is not None and not (
            self.width < self.disclosure_time < self.separation + self.width
        ):
            raise ValueError("disclosure_time must lie in (width, separation + width)")

    @property
    def n_channels(self) -> int:
        return self.n_blocks * self.block_len

    @property
    def is_compact(self) -> bool:
        return self.tail_exponent is None

    @property
    def tau_d(self) -> float:
        """Disclosure horizon, defaulting to the midpoint of its interval."""
        if self.disclosure_time is not None:
            return self.disclosure_time
        return self.width + self.separation / 2.0

    @property
    def full_access_horizon(self) -> float:
        """Light-cone coordinate at which the entire nominal state is visible."""
        return self.separation + self.width

    def make_state(self, bit: int, translation: float = 0.0) -> StretchedState:
        return StretchedState.create(
            self.width, self.separation, bit, self.tail_exponent, translation
        )


def accessible_horizon(config: ProtocolConfig, t: float) -> float:
    """Light-cone horizon a receiver can reach at wall time ``t``.

    Nothing of a state is accessible before its front edge has crossed the
    channel, so the horizon trails the wall clock by the channel length.
    """
    return t - config.channel_delay


@dataclass(frozen=True)
class Honest:
    """Follow the protocol as agreed."""


@dataclass(frozen=True)
class DelayBlocks:
    """Sender who postpones the choice for whole blocks.

    The delayed states necessarily miss the front hump of the honest profile,
    so each one passes verification with at most the squared-overlap
    probability and lands in the orthogonal outcome otherwise.
    """

    blocks: frozenset[int]

    def __init__(self, blocks: Iterable[int]) -> None:
        object.__setattr__(self, "blocks", frozenset(int(b) for b in blocks))


@dataclass(frozen=True)
class EarlyGuess:
    """Receiver who guesses the secret parity at disclosure time."""


@dataclass(frozen=True)
class SendBack:
    """Coin-toss peer who mirrors arriving states instead of sending any."""


HONEST = Honest()


@dataclass(frozen=True)
class Event:
    t: float
    actor: str
    kind: str
    payload: dict


@dataclass
class Transcript:
    """Time-ordered log of everything both parties emitted and observed."""

    events: list[Event] = field(default_factory=list)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    bit: int | None = None
    channel: int | None = None
    reason: AbortReason | None = None

    def code(self) -> str:
        if self.accepted:
            return f"ACCEPTED:{self.bit}"
        return f"ABORTED:{self.channel}:{self.reason.value}"


@dataclass(frozen=True)
class EarlyGuessReport:
    guess: int
    confidence: float
    committed_bit: int
    correct: bool


@dataclass(frozen=True)
class BitCommitmentResult:
    transcript: Transcript
    verdict: Verdict
    committed_bit: int
    early_guess: EarlyGuessReport | None = None


@dataclass(frozen=True)
class CoinTossResult:
    transcript: Transcript
    verdict: Verdict
    lot: int | None
    winner: str | None
    parity_a: int | None
    parity_b: int | None
    early_guess: EarlyGuessReport | None = None


_KIND_ORDER = {
    "emit": 0,
    "mirror": 1,
    "detect": 2,
    "early_guess": 3,
    "disclose": 4,
    "verdict": 5,
}


def _event_key(event: Event):
    sub = event.payload.get("phase", event.payload.get("channel", -1))
    return (event.t, _KIND_ORDER.get(event.kind, 9), sub)


def _finish_transcript(events: list[Event]) -> Transcript:
    return Transcript(sorted(events, key=_event_key))


def _rng_streams(seed: int, count: int):
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in root.spawn(count)]


@lru_cache(maxsize=None)
def _delay_pass_probability(
    width: float, separation: float, tail_exponent: float | None
) -> float:
    """Best verification-pass probability of a whole-block delayer.

    The most favorable delayed state is an exact copy of the rear hump, which
    saturates the overlap bound; computing it once per geometry keeps runs
    cheap.
    """
    honest = StretchedState.create(width, separation, 0, tail_exponent)
    return delayed_overlap(honest.rear, honest)


def _sample_outcomes(config: ProtocolConfig, bits, rng, shift: float = 0.0):
    """Draw (tau, outcome) per channel for honestly prepared states.

    Fire coordinates follow the two-hump density (shifted for mirrored
    states); an outcome inside a nominal hump window reveals the internal
    bit, anything else lands in the orthogonal complement.
    """
    state = config.make_state(0)
    n = len(bits)
    pick_rear = rng.random(n) < 0.5
    u = rng.random(n)
    taus = np.where(pick_rear, state.rear.ppf(u), state.front.ppf(u)) + shift
    windows = state.hump_windows()
    records = []
    for c in range(n):
        tau = float(taus[c])
        in_window = any(w.contains(tau) for w in windows)
        outcome = f"ch{bits[c]}" if in_window else "perp"
        records.append((tau, outcome))
    return records


def _apply_delays(config: ProtocolConfig, records, delayed_channels, bits, rng):
    """Overwrite delayed channels with the cheat-detection outcome law."""
    if not delayed_channels:
        return records
    p_pass = _delay_pass_probability(
        config.width, config.separation, config.tail_exponent
    )
    state = config.make_state(0)
    taus = state.rear.ppf(rng.random(len(delayed_channels)))
    coins = rng.random(len(delayed_channels))
    for i, c in enumerate(delayed_channels):
        outcome = f"ch{bits[c]}" if coins[i] < p_pass else "perp"
        records[c] = (float(taus[i]), outcome)
    return records


def _detect_events(config, records, actor, direction):
    events = []
    horizon = config.full_access_horizon
    for c, (tau, outcome) in enumerate(records):
        if tau <= horizon:
            events.append(
                Event(
                    tau + config.channel_delay,
                    actor,
                    "detect",
                    {"channel": c, "outcome": outcome, "tau": tau, "direction": direction},
                )
            )
    return events


def _fired_values(config, records, horizon):
    """Channel values visible from outcomes fired at or before ``horizon``."""
    visible = {}
    for c, (tau, outcome) in enumerate(records):
        if tau <= horizon and outcome != "perp":
            visible[c] = int(outcome[2])
    return visible


def _make_guess(config, records, committed_bit, actor, direction, events):
    visible = _fired_values(config, records, config.tau_d)
    guess = exact_parity_guesser(visible, config.n_blocks, config.block_len)
    events.append(
        Event(
            config.tau_d + config.channel_delay,
            actor,
            "early_guess",
            {
                "fired": {str(c): b for c, b in sorted(visible.items())},
                "direction": direction,
                "guess": guess.guess,
                "confidence": guess.confidence,
            },
        )
    )
    return EarlyGuessReport(
        guess.guess, guess.confidence, committed_bit, guess.guess == committed_bit
    )


def _disclose_items(secret: Secret, channels) -> list[dict]:
    return [
        {"channel": c, "bit": secret.channel_bits[c], "block": secret.code.block_of(c)}
        for c in channels
    ]


def _verify_announcement(config, records, announced):
    """Full-access verification of one direction; None means all consistent.

    Scans channels in index order: a channel that never fired within the full
    nominal extent, fired orthogonally, or fired against its announced bit
    aborts immediately.  Announced block structure is then checked for shape
    (every block exactly block_len channels) and per-block uniformity.
    """
    nk = config.n_channels
    horizon = config.full_access_horizon
    for c in range(nk):
        if c not in announced:
            return c, AbortReason.INCONSISTENT_DISCLOSURE
        tau, outcome = records[c]
        if tau > horizon:
            return c, AbortReason.SILENT_AT_FULL_ACCESS
        if outcome == "perp":
            return c, AbortReason.PERP_OUTCOME
        if int(outcome[2]) != announced[c][0]:
            return c, AbortReason.WRONG_CHANNEL
    extras = sorted(set(announced) - set(range(nk)))
    if extras:
        return extras[0], AbortReason.INCONSISTENT_DISCLOSURE
    groups: dict[int, list[int]] = {}
    for c, (_, blk) in announced.items():
        groups.setdefault(blk, []).append(c)
    for blk in sorted(groups):
        if len(groups[blk]) != config.block_len:
            return min(groups[blk]), AbortReason.INCONSISTENT_DISCLOSURE
    for blk in sorted(groups):
        chans = sorted(groups[blk])
        first_bit = announced[chans[0]][0]
        for c in chans[1:]:
            if announced[c][0] != first_bit:
                return c, AbortReason.BLOCK_MISMATCH
    return None


def _announced_parity(config, announced) -> int:
    bits = [announced[c][0] for c in range(config.n_channels)]
    return block_string_parity(bits, config.block_len)


def run_bit_commitment(
    config: ProtocolConfig,
    strategy_a=HONEST,
    strategy_b=HONEST,
    seed: int | None = None,
) -> BitCommitmentResult:
    """Execute one commitment: emission, growing access, disclosure, verdict.

    The sender commits the parity of the scattered block string at t = 0; the
    receiver accumulates outcomes, optionally guesses the parity just before
    requesting disclosure, and verifies every channel plus the block
    structure once the full state extent has arrived.
    """
    if not isinstance(strategy_a, (Honest, DelayBlocks)):
        raise ValueError("sender strategy must be Honest or DelayBlocks")
    if not isinstance(strategy_b, (Honest, EarlyGuess)):
        raise ValueError("receiver strategy must be Honest or EarlyGuess")
    rng_a, rng_b = _rng_streams(config.master_seed if seed is None else seed, 2)
    secret = sample_secret(config.n_blocks, config.block_len, rng_a)
    delayed_blocks: frozenset[int] = frozenset()
    if isinstance(strategy_a, DelayBlocks):
        delayed_blocks = strategy_a.blocks
        if any(not 0 <= b < config.n_blocks for b in delayed_blocks):
            raise ValueError("delayed block index out of range")
    delayed_channels = [
        c for c in range(config.n_channels) if secret.code.block_of(c) in delayed_blocks
    ]
    delayed_set = frozenset(delayed_channels)

    events = [
        Event(0.0, "A", "emit", {"channel": c, "delayed": c in delayed_set})
        for c in range(config.n_channels)
    ]
    records = _sample_outcomes(config, secret.channel_bits, rng_b)
    records = _apply_delays(config, records, delayed_channels, secret.channel_bits, rng_b)
    events.extend(_detect_events(config, records, "B", "A->B"))

    early = None
    if isinstance(strategy_b, EarlyGuess):
        early = _make_guess(config, records, secret.parity, "B", "A->B", events)

    t_d = config.tau_d + config.channel_delay
    announced = {c: (secret.channel_bits[c], secret.code.block_of(c)) for c in range(config.n_channels)}
    events.append(
        Event(
            t_d,
            "A",
            "disclose",
            {"phase": 1, "channels": _disclose_items(secret, range(config.n_channels))},
        )
    )

    failure = _verify_announcement(config, records, announced)
    if failure is None:
        verdict = Verdict(True, bit=_announced_parity(config, announced))
    else:
        verdict = Verdict(False, channel=failure[0], reason=failure[1])
    t_verify = config.full_access_horizon + config.channel_delay
    events.append(Event(t_verify, "B", "verdict", {"verdict": verdict.code()}))

    transcript = _finish_transcript(events)
    audit_transcript(transcript, config)
    return BitCommitmentResult(transcript, verdict, secret.parity, early)


def _mirror_phase_plan(config, known, guesses):
    """Block ids a mirroring peer fabricates for its full announcement.

    Channels are grouped by announced value into blocks of block_len; when
    the value totals cannot form such blocks (which implies some guess is
    wrong anyway) a flat sequential grouping is announced instead and fails
    the structural check.
    """
    values = dict(known)
    values.update(guesses)
    ones = sum(values.values())
    if ones % config.block_len:
        return {c: c // config.block_len for c in range(config.n_channels)}
    plan = {}
    next_block = 0
    for value in (0, 1):
        chans = sorted(c for c, v in values.items() if v == value)
        for i, c in enumerate(chans):
            plan[c] = next_block + i // config.block_len
        next_block += len(chans) // config.block_len
    return plan


def run_coin_toss(
    config: ProtocolConfig,
    strategy_a=HONEST,
    strategy_b=HONEST,
    enforce_half_disclosure: bool = True,
    seed: int | None = None,
) -> CoinTossResult:
    """Execute one coin toss with staged or single-shot classical disclosure.

    Both peers emit block-coded strings at t = 0 and the lot is the XOR of
    the two announced parities (the initiator wins on 0 by the pre-agreed
    mapping).  With staged disclosure the responder's first batch must cover
    the channel indices the initiator has not yet disclosed, which is what
    forces a mirroring cheater into blind per-channel guesses.
    """
    if not isinstance(strategy_a, Honest):
        raise ValueError("only an honest initiator is modeled for the coin toss")
    if not isinstance(strategy_b, (Honest, EarlyGuess, SendBack)):
        raise ValueError("peer strategy must be Honest, EarlyGuess, or SendBack")
    rng_a, rng_b, rng_ma, rng_mb = _rng_streams(
        config.master_seed if seed is None else seed, 4
    )
    nk = config.n_channels
    secret_a = sample_secret(config.n_blocks, config.block_len, rng_a)
    mirror = isinstance(strategy_b, SendBack)
    secret_b = None if mirror else sample_secret(config.n_blocks, config.block_len, rng_b)

    events = [
        Event(0.0, "A", "emit", {"channel": c, "direction": "A->B"}) for c in range(nk)
    ]
    if mirror:
        events.extend(
            Event(config.channel_delay, "B", "mirror", {"channel": c}) for c in range(nk)
        )
    else:
        events.extend(
            Event(0.0, "B", "emit", {"channel": c, "direction": "B->A"}) for c in range(nk)
        )

    records_ab = _sample_outcomes(config, secret_a.channel_bits, rng_mb)
    if mirror:
        records_ba = _sample_outcomes(
            config, secret_a.channel_bits, rng_ma, shift=2.0 * config.channel_delay
        )
    else:
        records_ba = _sample_outcomes(config, secret_b.channel_bits, rng_ma)
    events.extend(_detect_events(config, records_ab, "B", "A->B"))
    events.extend(_detect_events(config, records_ba, "A", "B->A"))

    early = None
    if isinstance(strategy_b, EarlyGuess):
        early = _make_guess(config, records_ab, secret_a.parity, "B", "A->B", events)

    t_d = config.tau_d + config.channel_delay
    announced_a: dict[int, tuple[int, int]] = {}
    announced_b: dict[int, tuple[int, int]] = {}

    def disclose(actor, phase, items):
        events.append(Event(t_d, actor, "disclose", {"phase": phase, "channels": items}))
        target = announced_a if actor == "A" else announced_b
        for item in items:
            target[item["channel"]] = (item["bit"], item["block"])

    if enforce_half_disclosure:
        first_blocks = (config.n_blocks + 1) // 2
        s_a = [c for c in range(nk) if secret_a.code.block_of(c) < first_blocks]
        comp = [c for c in range(nk) if c not in set(s_a)]
        disclose("A", 1, _disclose_items(secret_a, s_a))
        if mirror:
            known = {c: secret_a.channel_bits[c] for c in s_a}
            guesses = {c: int(rng_b.integers(0, 2)) for c in comp}
            plan = _mirror_phase_plan(config, known, guesses)
            disclose(
                "B",
                2,
                [{"channel": c, "bit": guesses[c], "block": plan[c]} for c in comp],
            )
            disclose("A", 3, _disclose_items(secret_a, comp))
            disclose(
                "B",
                4,
                [{"channel": c, "bit": known[c], "block": plan[c]} for c in s_a],
            )
        else:
            disclose("B", 2, _disclose_items(secret_b, comp))
            disclose("A", 3, _disclose_items(secret_a, comp))
            disclose("B", 4, _disclose_items(secret_b, s_a))
    else:
        disclose("A", 1, _disclose_items(secret_a, range(nk)))
        if mirror:
            copied = [
                {"channel": c, "bit": secret_a.channel_bits[c], "block": secret_a.code.block_of(c)}
                for c in range(nk)
            ]
            disclose("B", 2, copied)
        else:
            disclose("B", 2, _disclose_items(secret_b, range(nk)))

    failure = None
    failed_by = None
    if not mirror:
        failure = _verify_announcement(config, records_ab, announced_a)
        failed_by = "B" if failure else None
    if failure is None:
        failure = _verify_announcement(config, records_ba, announced_b)
        failed_by = "A" if failure else failed_by

    lot = winner = parity_a = parity_b = None
    if failure is None:
        parity_a = _announced_parity(config, announced_a)
        parity_b = _announced_parity(config, announced_b)
        lot = parity_a ^ parity_b
        winner = "A" if lot == 0 else "B"
        verdict = Verdict(True, bit=lot)
    else:
        verdict = Verdict(False, channel=failure[0], reason=failure[1])
    t_verify = config.full_access_horizon + config.channel_delay
    payload = {"verdict": verdict.code()}
    if failed_by:
        payload["by"] = failed_by
    if winner:
        payload["winner"] = winner
    events.append(Event(t_verify, failed_by or "A", "verdict", payload))

    transcript = _finish_transcript(events)
    audit_transcript(transcript, config)
    return CoinTossResult(transcript, verdict, lot, winner, parity_a, parity_b, early)


def mirror_guess_acceptance(n_blocks: int, block_len: int) -> Fraction:
    """Exact acceptance probability of the blind mirror under staged disclosure.

    Enumerates the mirror's whole guess space against the exact distribution
    of the initiator's still-undisclosed channel values.  Each of the
    ``floor(N/2) * k`` required values is an independent fair guess, so the
    exhaustive sum collapses to 2 to the minus that count; the enumeration is
    kept literal as an independent check of that collapse.
    """
    if n_blocks < 1 or block_len < 1:
        raise ValueError("n_blocks and block_len must be at least 1")
    hidden_blocks = n_blocks - (n_blocks + 1) // 2
    m = hidden_blocks * block_len
    if m == 0:
        return Fraction(1)
    if m > 16:
        raise ValueError("exhaustive mirror oracle limited to 16 guessed channels")
    total = Fraction(0)
    truth_mass = Fraction(0)
    for truth in range(1 << m):
        ones = truth.bit_count()
        if ones % block_len:
            continue
        level = ones // block_len
        if level > hidden_blocks:
            continue
        p_truth = Fraction(comb(hidden_blocks, level), 2**hidden_blocks) / comb(m, ones)
        truth_mass += p_truth
        for guess in range(1 << m):
            if guess == truth:
                total += p_truth * Fraction(1, 2**m)
    if truth_mass != 1:
        raise AssertionError("truth distribution failed to normalize")
    return total


def audit_transcript(transcript: Transcript, config: ProtocolConfig) -> None:
    """Check causality and phase ordering of a finished transcript.

    Every early guess may only cite detector records that had fired by the
    guess time with the outcomes the log actually contains, and staged
    disclosure must appear in its agreed phase order.
    """
    times = [e.t for e in transcript.events]
    for before, after in zip(times, times[1:]):
        if after < before - 1e-12:
            raise AuditError("events out of time order")
    detections = {}
    for e in transcript.events:
        if e.kind == "detect":
            detections[(e.payload["direction"], e.payload["channel"])] = e
    for e in transcript.events:
        if e.kind != "early_guess":
            continue
        direction = e.payload.get("direction", "A->B")
        for c_str, bit in e.payload["fired"].items():
            d = detections.get((direction, int(c_str)))
            if d is None or d.t > e.t + 1e-12:
                raise AuditError("guess cites a record outside its light cone")
            if d.payload["outcome"] != f"ch{bit}":
                raise AuditError("guess cites a record inconsistent with the log")
    phases = [e.payload["phase"] for e in transcript.events if e.kind == "disclose"]
    if phases != sorted(phases):
        raise AuditError("disclosure phases out of order")


def transcript_to_jsonl(transcript: Transcript) -> str:
    """Serialize a transcript as one stable JSON object per line."""
    lines = [
        json.dumps(
            {"t": e.t, "actor": e.actor, "kind": e.kind, "payload": e.payload},
            sort_keys=True,
            separators=(",", ":"),
        )
        for e in transcript.events
    ]
    return "\n".join(lines) + "\n"
