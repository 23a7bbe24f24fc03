"""Conversation-level decoding with multi-turn beam search.

Core pieces: domain types for alternating two-speaker conversations, a
pluggable speaker-model interface with tabular and n-gram toy
implementations, utterance-level searches (greedy / beam / iterative beam),
the multi-turn lookahead engine with three partner approximations, exact
enumeration oracles for verification, selection metrics, and a session
service with CLI.
"""

from .errors import ConfigurationError, EnumerationCapError, IngestionError, SearchError
from .metrics import SelectionStats, conversation_nll, selection_stats
from .models import (
    CallCountingModel,
    NGramModel,
    SpeakerModel,
    TabularModel,
    conversation_logprob,
    fit_ngram,
    utterance_logprob,
)
from .multiturn import (
    HypothesisSet,
    MultiTurnParams,
    PartnerKind,
    ScoredSequence,
    SearchTrace,
    make_partner,
    multi_turn_search,
)
from .oracle import (
    OracleParams,
    count_utterances,
    oracle_conservative_argmax,
    oracle_optimistic_argmax,
    oracle_utterance_argmax,
)
from .search import (
    ScoredUtterance,
    SearchParams,
    beam_search,
    greedy_search,
    hamming_distance,
    iterative_beam_search,
    iterative_beam_search_grouped,
)
from .types import Context, Conversation, SpeakerRole, Token, Utterance, Vocabulary

__version__ = "0.1.0"

__all__ = [
    "CallCountingModel",
    "ConfigurationError",
    "Context",
    "Conversation",
    "EnumerationCapError",
    "HypothesisSet",
    "IngestionError",
    "MultiTurnParams",
    "NGramModel",
    "OracleParams",
    "PartnerKind",
    "ScoredSequence",
    "ScoredUtterance",
    "SearchError",
    "SearchParams",
    "SearchTrace",
    "SelectionStats",
    "SpeakerModel",
    "SpeakerRole",
    "TabularModel",
    "Token",
    "Utterance",
    "Vocabulary",
    "beam_search",
    "conversation_logprob",
    "conversation_nll",
    "count_utterances",
    "fit_ngram",
    "greedy_search",
    "hamming_distance",
    "iterative_beam_search",
    "iterative_beam_search_grouped",
    "make_partner",
    "multi_turn_search",
    "oracle_conservative_argmax",
    "oracle_optimistic_argmax",
    "oracle_utterance_argmax",
    "selection_stats",
    "utterance_logprob",
]
