"""Sparse stochastic variational inference for sentence-level relation clustering.

A library plus CLI for a multi-view mixed-membership model: each document
holds sentences, each sentence carries one latent relation and emits
observations in several feature-type vocabularies.  Training is either
minibatch natural-gradient variational inference with sparse updates
(`ssvi`) or a fully collapsed Gibbs sampler (`gibbs`); `evaluation` scores
held-out perplexity and ranks sentences by relation.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Corpus,
    Document,
    Sentence,
    Vocabulary,
    corpus_stats,
    load_corpus,
    parse_corpus,
    split_corpus,
    write_corpus,
)
from .errors import ConfigError, DataError, NumericalError, RelssviError  # noqa: F401
from .hyperopt import HyperOptConfig  # noqa: F401
from .model import AssignmentState, LearningSchedule, VariationalModel, init_model  # noqa: F401
from .ssvi import SsviConfig, train  # noqa: F401
