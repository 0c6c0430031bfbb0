"""
Collapsed Gibbs baseline and computation-matched comparison
===========================================================

Run the collapsed Gibbs sampler on the same corpus as the variational
trainer and align their held-out perplexity trajectories on a shared
computation axis (cumulative document sweeps), so neither trainer gets
credit for simply doing more work per logged point.

Equivalent CLI:  relssvi train --trainer gibbs / relssvi compare
"""

from relssvi import LearningSchedule, SsviConfig, split_corpus, train
from relssvi.evaluation import comparison_curves
from relssvi.gibbs import run_gibbs
from relssvi.metrics import MetricsLog
from relssvi.synth import generate_planted

##############################################################################
# Same data regime as the variational demo: 200 planted documents, 4
# relations, quarter held out.

planted = generate_planted(
    D=200,
    R=4,
    feature_types=("ent_left", "ent_right", "ent_type"),
    values_per_type=20,
    seed=11,
)
train_corpus, eval_corpus = split_corpus(planted.corpus, eval_fraction=0.25, seed=0)

##############################################################################
# The Gibbs sampler keeps hyperparameters fixed and reassigns every
# sentence each sweep.  One sweep costs D document-sweeps; one variational
# iteration costs S * S' document-sweeps.  Choosing S=25, S'=6 makes an
# iteration cost exactly D=150 document-sweeps, so checkpoints logged every
# 10 iterations and every 10 sweeps land on the same axis values.

ssvi_metrics = MetricsLog()
train(
    train_corpus,
    SsviConfig(S=25, S_prime=6, burnin=2, T=40,
               schedule=LearningSchedule(a=0.5, b=10.0, c=0.6), seed=7),
    R=4,
    eta0=0.1,
    alpha0=0.1,
    metrics=ssvi_metrics,
    eval_corpus=eval_corpus,
    eval_every=10,
)

gibbs_metrics = MetricsLog()
result = run_gibbs(
    train_corpus,
    R=4,
    eta=0.1,
    alpha=0.1,
    sweeps=40,
    seed=7,
    metrics=gibbs_metrics,
    eval_corpus=eval_corpus,
    eval_every=10,
)
print(f"gibbs ran {result.sweeps_run} sweeps; "
      f"posterior-mean model snapshot has R={result.state.to_model().R}")

##############################################################################
# comparison_curves keeps only rows that carry an evaluation score, merges
# the two logs on the shared document-sweeps axis, and warns when either
# side is missing checkpoints.  At 150 documents the batch sampler mixes
# almost immediately while the stochastic trainer is still paying its
# learning-rate schedule; the stochastic trainer's advantage is that its
# per-iteration cost stays S * S' regardless of corpus size.

rows, warnings = comparison_curves(ssvi_metrics.rows, gibbs_metrics.rows)
print("\ndocument_sweeps  ssvi_perplexity  gibbs_perplexity")
for row in rows:
    cells = [f"{row['document_sweeps']:>15}"]
    for key, width in (("ssvi_perplexity", 16), ("gibbs_perplexity", 17)):
        value = row[key]
        cells.append(f"{value:>{width}.3f}" if value is not None else f"{'-':>{width}}")
    print(" ".join(cells))
for w in warnings:
    print(f"note: {w}")
