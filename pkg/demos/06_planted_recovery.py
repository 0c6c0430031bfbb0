"""
Recovering planted structure, measured by mutual information
============================================================

The synthetic generator records which relation produced every sentence, so
cluster recovery can be scored exactly: train both trainers, decode each
sentence's most frequent sampled assignment, and compare against the
planted labels with normalized mutual information (1.0 = identical
partition up to relabeling, 0.0 = independent).

Equivalent CLI:  relssvi synth / relssvi train / relssvi report
"""

import time

from relssvi import LearningSchedule, SsviConfig, train
from relssvi.evaluation import map_assignments, normalized_mutual_information
from relssvi.gibbs import run_gibbs
from relssvi.synth import generate_planted

##############################################################################
# 400 documents, 5 planted relations over three entity feature types.
# within_block < 1 leaves a little cross-block mass so the task is not
# trivially separable.

planted = generate_planted(
    D=400,
    R=5,
    feature_types=("ent_left", "ent_right", "ent_type"),
    values_per_type=25,
    within_block=0.95,
    seed=13,
)
corpus = planted.corpus
truth = planted.labels_flat()
print(f"{corpus.D} documents, {corpus.n_sentences} sentences, 5 planted relations")


def decoded_labels(model):
    """Flatten per-sentence modal assignments in corpus document order."""
    assign = map_assignments(model, corpus, n_samples=25, burnin=5, seed=3)
    labels = []
    for doc in corpus.documents:
        labels.extend(assign[doc.id])
    return labels

##############################################################################
# Stochastic variational trainer.

t0 = time.perf_counter()
ssvi_model = train(
    corpus,
    SsviConfig(S=50, S_prime=5, burnin=2, T=80,
               schedule=LearningSchedule(a=0.5, b=10.0, c=0.6), seed=1),
    R=5,
    eta0=0.1,
    alpha0=0.1,
)
ssvi_nmi = normalized_mutual_information(decoded_labels(ssvi_model), truth)
print(f"ssvi : NMI {ssvi_nmi:.3f}  ({time.perf_counter() - t0:.1f}s)")

##############################################################################
# Collapsed Gibbs baseline, converted to a posterior-mean model for the
# same decoding path.

t0 = time.perf_counter()
result = run_gibbs(corpus, R=5, eta=0.1, alpha=0.1, sweeps=60, seed=1)
gibbs_model = result.state.to_model(vocab_hash=corpus.vocab.content_hash())
gibbs_nmi = normalized_mutual_information(decoded_labels(gibbs_model), truth)
print(f"gibbs: NMI {gibbs_nmi:.3f}  ({time.perf_counter() - t0:.1f}s)")

assert ssvi_nmi > 0.7 and gibbs_nmi > 0.7
print("\nboth trainers recover the planted partition")
