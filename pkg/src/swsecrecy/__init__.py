"""Compression-equivocation rate regions for distributed source coding with
an eavesdropper, plus a random-binning simulator that checks the theory at
small block lengths."""

__version__ = "0.1.0"

from .errors import (
    AlphabetMismatch,
    AlphabetTooLarge,
    DimensionMismatch,
    IndexOutOfRange,
    InputError,
    InvariantViolation,
    LengthMismatch,
    MarkovPreconditionFailed,
    NameCollision,
    NegativeMass,
    NotInPin,
    NotMarkov,
    NotNormalizable,
    ParseError,
    PreconditionError,
    RoleError,
    SecrecyToolError,
    TooLarge,
    UnknownVariable,
    ValidationError,
)
from .probcore import (
    Alphabet,
    Channel,
    ConditionalTable,
    DegradednessResult,
    InfoQuery,
    JointDistribution,
    attach_channel,
    binary_alphabet,
    binary_symmetric_channel,
    build_joint,
    conditional,
    constant_channel,
    degradedness_test,
    entropy,
    info_measure,
    marginal,
    markov_residual,
    mutual_information,
)
from .auxsearch import (
    AuxChannelU,
    FrontierTrace,
    SearchBudget,
    SearchResult,
    VMap,
    enumerate_vmaps,
    maximize_delta_uncoded,
    maximize_multi_tap,
    oracle_grid_u,
    trace_inner_frontier,
)
from .regions import (
    ContainsResult,
    FrontierSamples,
    RatePair,
    RateTriple,
    RegionDescriptor,
    contains,
    convexify,
    corollary1_region,
    corollary2_region,
    corollary3_region,
    corollary4_region,
    corollary5_region,
    eve_si_regions,
    inner_point,
    lemma1_region,
    outer_overapprox,
)
from .binsim import (
    Codebooks,
    EquivocationReport,
    ErrorEstimate,
    ExperimentReport,
    Message,
    SchemeConfig,
    decode_bob,
    encode_alice,
    encode_charlie,
    estimate_error,
    exact_equivocation,
    generate_codebooks,
    plan_scheme,
    run_experiment,
    xor_pair_bins,
)
from .cli import ResolvedConfig, RunManifest, SourceSpec, parse_config

__all__ = [name for name in dir() if not name.startswith("_")]
