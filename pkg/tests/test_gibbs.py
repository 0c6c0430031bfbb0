"""Collapsed Gibbs baseline: conditionals, count bookkeeping, posteriors."""

import numpy as np
import numpy.testing as npt
import pytest
import scipy.special as sps

from relssvi.errors import ConfigError, NumericalError
from relssvi.gibbs import GibbsState, gibbs_full_conditional, gibbs_sweep, run_gibbs
from relssvi.metrics import MetricsLog
from relssvi.numerics import make_rng
from relssvi.synth import generate_planted

from conftest import corpus_from, random_corpus
from enumeration_oracle import (
    enumerate_posterior,
    sample_config_distribution,
    total_variation,
)


def toy_corpus():
    """One feature type, two values, three sentences across two documents."""
    return corpus_from(
        [("d1", [{"vb": ["a"]}, {"vb": ["b"]}]),
         ("d2", [{"vb": ["a", "b"]}])],
        feature_set="vb",
    )


def predictive_weights_reference(state, d, o):
    """Dirichlet-multinomial predictive via scipy gammaln ratios."""
    occ = state.assign.occupancy[d]
    logw = np.log(occ + state.alpha)
    sent = state.docs[d].sentences[o]
    for f, (vs, cs) in enumerate(sent.token_arrays):
        if len(vs) == 0:
            continue
        e = state.eta[f]
        n_f = float(cs.sum())
        col = state.topic_counts[f][:, vs] + e  # (R, n_distinct)
        logw += (sps.gammaln(col + cs) - sps.gammaln(col)).sum(axis=1)
        row = state.row_counts[f] + state.vocab_sizes[f] * e
        logw -= sps.gammaln(row + n_f) - sps.gammaln(row)
    w = np.exp(logw - logw.max())
    return w / w.sum()


class TestFullConditional:
    def test_single_relation(self):
        state = GibbsState(toy_corpus(), R=1, eta=0.5, alpha=1.0)
        w = gibbs_full_conditional(state, 0, 0)
        assert w.shape == (1,) and w[0] == pytest.approx(1.0)

    def test_featureless_sentence_follows_occupancy(self):
        corpus = corpus_from(
            [("d1", [{}, {"vb": ["a"]}, {"vb": ["a"]}])], feature_set="vb",
        )
        state = GibbsState(corpus, R=2, eta=0.5, alpha=0.25)
        state.add_sentence(0, 1, 0)
        state.add_sentence(0, 2, 0)
        w = gibbs_full_conditional(state, 0, 0)
        assert w[0] / w[1] == pytest.approx((2 + 0.25) / 0.25, rel=1e-12)

    def test_repeated_values_use_ascending_offsets(self):
        corpus = corpus_from(
            [("d1", [{"vb": ["a", "a"]}]), ("d2", [{"vb": ["a"]}])],
            feature_set="vb",
        )
        state = GibbsState(corpus, R=2, eta=0.5, alpha=1.0)
        state.add_sentence(1, 0, 0)  # M[0, a] = 1, M[1, a] = 0
        w = gibbs_full_conditional(state, 0, 0)
        eta, W = 0.5, 1
        M_col = np.array([1.0, 0.0])
        M_row = np.array([1.0, 0.0])
        want = ((M_col + eta) * (M_col + eta + 1.0)
                / ((M_row + W * eta) * (M_row + W * eta + 1.0)))
        assert w[0] / w[1] == pytest.approx(want[0] / want[1], rel=1e-10)

    def test_matches_predictive_closed_form(self):
        rng = np.random.default_rng(5)
        corpus = random_corpus(6, seed=8)
        for trial in range(40):
            R = int(rng.integers(2, 5))
            state = GibbsState(corpus, R=R, eta=float(rng.uniform(0.1, 2.0)),
                               alpha=float(rng.uniform(0.1, 2.0)))
            # randomly assign everything, then release one sentence
            for d, doc in enumerate(corpus.documents):
                for i in range(doc.n_sentences):
                    state.add_sentence(d, i, int(rng.integers(R)))
            d = int(rng.integers(len(corpus.documents)))
            i = int(rng.integers(corpus.documents[d].n_sentences))
            state.remove_sentence(d, i)
            w = gibbs_full_conditional(state, d, i)
            npt.assert_allclose(w / w.sum(), predictive_weights_reference(state, d, i),
                                rtol=1e-10)

    def test_normalized_weights_sum_to_one(self):
        corpus = random_corpus(4, seed=3)
        rng = np.random.default_rng(11)
        state = GibbsState(corpus, R=3, eta=0.3, alpha=0.5)
        for d, doc in enumerate(corpus.documents):
            for i in range(doc.n_sentences):
                state.add_sentence(d, i, int(rng.integers(3)))
        state.remove_sentence(0, 0)
        w = gibbs_full_conditional(state, 0, 0)
        assert np.all(np.isfinite(w)) and np.all(w > 0.0)
        assert np.max(w) == pytest.approx(1.0)  # max-subtraction anchors at 1


class TestCountBookkeeping:
    def test_init_pass_assigns_every_sentence(self):
        corpus = random_corpus(10, seed=1)
        state = GibbsState(corpus, R=3, eta=0.2, alpha=0.4)
        gibbs_sweep(state, make_rng(0), init_only=True)
        for d, doc in enumerate(corpus.documents):
            assert np.all(state.assign.z[d] >= 0)
            assert state.assign.occupancy[d].sum() == doc.n_sentences
        state.check_counts()

    def test_init_only_skips_assigned_sentences(self):
        corpus = random_corpus(5, seed=2)
        state = GibbsState(corpus, R=3, eta=0.2, alpha=0.4)
        gibbs_sweep(state, make_rng(0), init_only=True)
        before = [z.copy() for z in state.assign.z]
        gibbs_sweep(state, make_rng(99), init_only=True)
        for a, b in zip(before, state.assign.z):
            npt.assert_array_equal(a, b)

    def test_counts_survive_many_sweeps(self):
        corpus = random_corpus(12, seed=4)
        state = GibbsState(corpus, R=4, eta=0.3, alpha=0.6)
        rng = make_rng(7)
        gibbs_sweep(state, rng, init_only=True)
        for _ in range(10):
            gibbs_sweep(state, rng)
            state.check_counts()
            npt.assert_allclose(
                state.assign.occupancy.sum(axis=1),
                [doc.n_sentences for doc in corpus.documents],
            )

    def test_removal_below_zero_detected(self):
        corpus = toy_corpus()
        state = GibbsState(corpus, R=2, eta=0.5, alpha=1.0)
        state.add_sentence(0, 0, 0)
        state.topic_counts[0][0].fill(0.0)  # corrupt the table
        with pytest.raises(NumericalError):
            state.remove_sentence(0, 0)

    def test_invalid_parameters_rejected(self):
        corpus = toy_corpus()
        with pytest.raises(ConfigError):
            GibbsState(corpus, R=0, eta=0.5, alpha=1.0)
        with pytest.raises(ConfigError):
            GibbsState(corpus, R=2, eta=0.0, alpha=1.0)
        with pytest.raises(ConfigError):
            GibbsState(corpus, R=2, eta=0.5, alpha=-1.0)


class TestToyPosterior:
    def test_empirical_distribution_matches_enumeration(self):
        corpus = corpus_from([("d1", [{"vb": ["a"]}, {"vb": ["b"]}])],
                             feature_set="vb")
        exact = enumerate_posterior(corpus, R=2, eta=1.0, alpha=1.0)
        assert sum(exact.values()) == pytest.approx(1.0, abs=1e-12)
        empirical = sample_config_distribution(corpus, R=2, eta=1.0, alpha=1.0,
                                               sweeps=20_000, burnin=500, seed=0)
        assert total_variation(exact, empirical) <= 0.02

    def test_document_order_does_not_change_posterior(self):
        forward = toy_corpus()
        backward = corpus_from(
            [("d2", [{"vb": ["a", "b"]}]),
             ("d1", [{"vb": ["a"]}, {"vb": ["b"]}])],
            feature_set="vb",
        )
        exact_f = enumerate_posterior(forward, R=2, eta=0.7, alpha=0.5)
        exact_b = enumerate_posterior(backward, R=2, eta=0.7, alpha=0.5)
        # layout of backward lists d2's sentence first; permute keys to match
        remapped = {(c[1], c[2], c[0]): p for c, p in exact_b.items()}
        for config, p in exact_f.items():
            assert remapped[config] == pytest.approx(p, rel=1e-10)
        empirical = sample_config_distribution(backward, R=2, eta=0.7, alpha=0.5,
                                               sweeps=20_000, burnin=500, seed=3)
        assert total_variation(exact_b, empirical) <= 0.03


class TestRunGibbs:
    def test_zero_sweeps_initializes_only(self):
        corpus = random_corpus(6, seed=0)
        result = run_gibbs(corpus, R=3, eta=0.2, alpha=0.4, sweeps=0, seed=1)
        assert result.sweeps_run == 0
        for d, doc in enumerate(corpus.documents):
            assert np.all(result.state.assign.z[d] >= 0)

    def test_negative_sweeps_rejected(self):
        with pytest.raises(ConfigError):
            run_gibbs(random_corpus(3, seed=0), R=2, eta=0.2, alpha=0.4,
                      sweeps=-1, seed=0)

    def test_metrics_accounting(self):
        corpus = random_corpus(7, seed=5)
        metrics = MetricsLog()
        run_gibbs(corpus, R=2, eta=0.2, alpha=0.4, sweeps=3, seed=1,
                  metrics=metrics)
        assert [r["iteration"] for r in metrics.rows] == [1, 2, 3]
        assert [r["document_sweeps_cumulative"] for r in metrics.rows] == [7, 14, 21]
        assert all(r["burnin_sweeps_cumulative"] == 7 for r in metrics.rows)

    def test_periodic_evaluation(self):
        planted = generate_planted(D=16, R=2, feature_types=("ent_left",),
                                   values_per_type=6, sentences_per_doc=(2, 4),
                                   seed=2)
        from relssvi.corpus import split_corpus

        train_c, eval_c = split_corpus(planted.corpus, 0.25, seed=0)
        metrics = MetricsLog()
        run_gibbs(train_c, R=2, eta=0.2, alpha=0.4, sweeps=4, seed=1,
                  metrics=metrics, eval_corpus=eval_c, eval_every=2,
                  eval_sweeps=6, eval_burnin=2)
        perps = [r["eval_perplexity"] for r in metrics.rows]
        assert perps[0] is None and perps[2] is None
        assert perps[1] > 0.0 and perps[3] > 0.0

    def test_deterministic_under_seed(self):
        corpus = random_corpus(10, seed=6)
        a = run_gibbs(corpus, R=3, eta=0.2, alpha=0.4, sweeps=5, seed=42)
        b = run_gibbs(corpus, R=3, eta=0.2, alpha=0.4, sweeps=5, seed=42)
        for za, zb in zip(a.state.assign.z, b.state.assign.z):
            npt.assert_array_equal(za, zb)
        c = run_gibbs(corpus, R=3, eta=0.2, alpha=0.4, sweeps=5, seed=43)
        assert any(not np.array_equal(za, zc)
                   for za, zc in zip(a.state.assign.z, c.state.assign.z))

    def test_export_matches_counts(self):
        corpus = random_corpus(8, seed=7)
        result = run_gibbs(corpus, R=3, eta=0.25, alpha=0.4, sweeps=4, seed=9)
        model = result.state.to_model(vocab_hash=corpus.vocab.content_hash())
        for f in range(corpus.F):
            want = result.state.topic_counts[f] + 0.25
            npt.assert_allclose(model.dense_lambda(f), want, rtol=1e-12)
            beta = model.beta_mean(f)
            npt.assert_allclose(beta.sum(axis=1), 1.0, rtol=1e-12)

    def test_export_round_trips_through_file(self, tmp_path):
        corpus = random_corpus(5, seed=8)
        result = run_gibbs(corpus, R=2, eta=0.3, alpha=0.5, sweeps=2, seed=0)
        model = result.state.to_model(vocab_hash=corpus.vocab.content_hash(),
                                      metadata={"trainer": "gibbs"})
        path = tmp_path / "gibbs-model.json"
        model.save(path)
        from relssvi.model import VariationalModel

        loaded = VariationalModel.load(path)
        for f in range(corpus.F):
            npt.assert_allclose(loaded.dense_lambda(f), model.dense_lambda(f),
                                rtol=1e-12)
