"""Relativistic bit-commitment and coin-tossing simulator.

A secret bit is committed as the parity of block-replicated bits carried by
two-hump wavepackets that cross the channel at light speed: while only the
front humps have arrived, the receiver's best parity guess is exponentially
close to a coin flip, while a sender who delays the choice is caught by the
orthogonal-outcome verification with probability exponentially close to one.
The package reproduces every closed-form rate of that analysis by Monte
Carlo and exact enumeration, and runs the full two-party protocols with
honest and cheating strategies.
"""

from .experiment import (
    SCENARIOS,
    CompareResult,
    ExperimentSpec,
    SummaryCell,
    cells_to_csv,
    cells_to_json,
    compare,
    run_experiment,
    wilson_interval,
)
from .measurement import (
    Channel,
    Consistency,
    DetectionRecord,
    GammaOperator,
    HelstromResult,
    PriorPair,
    composite_error,
    helstrom_error,
    sample_cheat_detection,
    sample_detection,
    verify_outcome,
)
from .parity import (
    DEFAULT_ENUM_BOUND,
    BlockCode,
    EnumerationBoundError,
    InconsistentEvidenceError,
    ParityGuess,
    Secret,
    alpha,
    block_string_parity,
    count_block_strings,
    count_block_strings_closed,
    exact_parity_guesser,
    p_acc_fixed,
    p_fixed_block,
    parity_posterior,
    pc_parity_block_bound,
    pc_parity_plain,
    random_block_code,
    sample_secret,
)
from .protocol import (
    HONEST,
    AbortReason,
    AuditError,
    BitCommitmentResult,
    CoinTossResult,
    DelayBlocks,
    EarlyGuess,
    EarlyGuessReport,
    Event,
    Honest,
    ProtocolConfig,
    SendBack,
    Transcript,
    Verdict,
    accessible_horizon,
    audit_transcript,
    mirror_guess_acceptance,
    run_bit_commitment,
    run_coin_toss,
    transcript_to_jsonl,
)
from .wavepacket import (
    StretchedState,
    Waveform,
    Window,
    delayed_overlap,
    translate,
    window_mass,
)

__version__ = "0.1.0"
