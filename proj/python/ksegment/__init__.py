"""k-segment inference for hidden Markov models.

Observation sequences are plain lists: floats for Gaussian models, 0-based
symbol indices for categorical ones. Counting specs default to standard
segment counting when omitted.
"""

from ._core import (
    Constraint,
    CountingSpec,
    EnumerationTooLarge,
    Model,
    ZeroProbabilityEvent,
    constrained_em,
    constrained_marginals,
    default_init,
    em_fit,
    ffbs_sample,
    gibbs_fit,
    log_likelihood,
    oracle_event_prob,
    posterior_marginals,
    segment_log_joint,
    segment_map,
    segment_prob,
    segment_sample,
    segment_viterbi,
    simulate,
    summary,
    viterbi,
)

__all__ = [
    "Constraint",
    "CountingSpec",
    "EnumerationTooLarge",
    "Model",
    "ZeroProbabilityEvent",
    "constrained_em",
    "constrained_marginals",
    "default_init",
    "em_fit",
    "ffbs_sample",
    "gibbs_fit",
    "log_likelihood",
    "oracle_event_prob",
    "posterior_marginals",
    "segment_log_joint",
    "segment_map",
    "segment_prob",
    "segment_sample",
    "segment_viterbi",
    "simulate",
    "summary",
    "viterbi",
]
