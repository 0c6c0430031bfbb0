"""Model state: schedules, sparse lambda bookkeeping, persistence."""

import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from relssvi.errors import ConfigError, DataError, NumericalError
from relssvi.model import (
    AssignmentState,
    LearningSchedule,
    VariationalModel,
    init_model,
)

from conftest import corpus_from


def make_model(R=2, sizes=(3, 2), eta=(0.5, 1.0), alpha=0.7):
    return VariationalModel(
        R=R,
        feature_types=("vb", "ent_type")[: len(sizes)],
        vocab_sizes=sizes,
        eta=np.asarray(eta, dtype=float)[: len(sizes)],
        alpha=alpha,
    )


class TestLearningSchedule:
    def test_examples(self):
        assert LearningSchedule(0.1, 1.0, 1.0).rate(0) == pytest.approx(0.1)
        assert LearningSchedule(0.01, 10.0, 0.51).rate(0) == pytest.approx(
            0.01 / 10.0 ** 0.51)
        assert LearningSchedule(5.0, 1.0, 1.0).rate(0) == 1.0  # clamped

    def test_monotone_decreasing(self):
        sched = LearningSchedule(1.0, 2.0, 0.6)
        rates = [sched.rate(t) for t in range(100)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))
        assert rates[-1] > 0.0

    @pytest.mark.parametrize("a,b,c", [
        (0.0, 1.0, 0.6), (-1.0, 1.0, 0.6), (1.0, 0.0, 0.6),
        (1.0, 1.0, 0.5), (1.0, 1.0, 1.2), (1.0, 1.0, 0.0),
    ])
    def test_invalid_parameters(self, a, b, c):
        with pytest.raises(ConfigError):
            LearningSchedule(a, b, c)

    def test_boundary_exponents(self):
        LearningSchedule(1.0, 1.0, 1.0)
        LearningSchedule(1.0, 1.0, 0.51)

    def test_negative_iteration_rejected(self):
        with pytest.raises(ConfigError):
            LearningSchedule(0.1, 1.0, 1.0).rate(-1)


class TestSparseLambda:
    def test_materialization_identity(self):
        m = make_model()
        m.add_scaled(0, 1, 0, 4.0)
        assert m.lambda_value(0, 0, 1) == pytest.approx(0.5 + 4.0)
        assert m.lambda_value(1, 0, 1) == pytest.approx(0.5)  # untouched = eta
        npt.assert_allclose(m.lambda_column(0, 1), [4.5, 0.5])
        npt.assert_allclose(m.row_totals(0), [3 * 0.5 + 4.0, 3 * 0.5])

    def test_decay_compounds_pi(self):
        m = make_model()
        m.decay(0.5)
        m.decay(0.5)
        assert m.pi == pytest.approx(0.25)

    def test_decay_shrinks_toward_eta(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 8.0)
        m.decay(0.75)
        assert m.lambda_value(0, 0, 0) == pytest.approx(0.5 + 0.25 * 8.0)

    def test_decay_at_rate_one_rejected(self):
        m = make_model()
        with pytest.raises(NumericalError):
            m.decay(1.0)

    def test_fuzzed_ops_match_dense_shadow(self):
        """Random decays and updates agree with an explicit dense array."""
        rng = np.random.default_rng(31)
        m = make_model(R=3, sizes=(4, 2), eta=(0.2, 1.5))
        dense = [np.full((3, 4), 0.2), np.full((3, 2), 1.5)]
        for _ in range(300):
            if rng.random() < 0.3:
                rho = rng.uniform(0.01, 0.9)
                m.decay(rho)
                for f, eta_f in ((0, 0.2), (1, 1.5)):
                    dense[f] = (1.0 - rho) * (dense[f] - eta_f) + eta_f
            else:
                f = int(rng.integers(2))
                v = int(rng.integers(dense[f].shape[1]))
                r = int(rng.integers(3))
                delta = rng.uniform(0.0, 5.0)
                m.add_scaled(f, v, r, delta)
                dense[f][r, v] += m.pi * delta
        for f in range(2):
            npt.assert_allclose(m.dense_lambda(f), dense[f], rtol=1e-10)
            npt.assert_allclose(m.row_totals(f), dense[f].sum(axis=1), rtol=1e-10)
        m.check_row_totals()

    def test_renormalize_is_noop_above_floor(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 2.0)
        m.decay(0.5)
        before = m.pi
        m.renormalize()
        assert m.pi == before

    def test_renormalize_preserves_lambda(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 1e120)
        m.add_scaled(1, 1, 1, 3e115)
        for _ in range(420):
            m.decay(0.5)
        assert m.pi < 1e-100
        before = [m.dense_lambda(f).copy() for f in range(2)]
        m.renormalize()
        assert m.pi == 1.0
        for f in range(2):
            npt.assert_allclose(m.dense_lambda(f), before[f], rtol=1e-9)
        m.check_row_totals()

    def test_prune_drops_only_negligible_entries(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 1e-20)   # far below 1e-12 * eta
        m.add_scaled(0, 1, 0, 3.0)
        m.prune()
        assert 0 not in m.cols[0]
        assert m.cols[0][1] == {0: 3.0}
        assert m.row_nnz[0][0] == 1
        npt.assert_allclose(m.row_totals(0), [3 * 0.5 + 3.0, 3 * 0.5], rtol=1e-12)
        m.check_row_totals()

    def test_row_total_drift_detected(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 2.0)
        m.row_scaled[0][0] += 1.0  # corrupt the incremental sum
        with pytest.raises(NumericalError):
            m.check_row_totals()

    def test_beta_mean_rows_normalize(self):
        m = make_model()
        m.add_scaled(0, 0, 0, 2.0)
        m.add_scaled(0, 2, 1, 5.0)
        beta = m.beta_mean(0)
        npt.assert_allclose(beta.sum(axis=1), [1.0, 1.0], rtol=1e-12)
        assert np.all(beta > 0.0)

    @pytest.mark.parametrize("kwargs", [
        dict(R=0), dict(eta=(0.5,)), dict(eta=(0.0, 1.0)),
        dict(eta=(-1.0, 1.0)), dict(alpha=0.0), dict(alpha=-2.0),
    ])
    def test_constructor_validation(self, kwargs):
        base = dict(R=2, sizes=(3, 2), eta=(0.5, 1.0), alpha=0.7)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            make_model(**base)


class TestPersistence:
    def build(self):
        m = make_model(R=2, sizes=(3, 2), eta=(0.5, 1.0), alpha=0.7)
        m.add_scaled(0, 0, 0, 2.0)
        m.add_scaled(0, 2, 1, 5.0)
        m.add_scaled(1, 1, 0, 0.25)
        m.decay(0.3)
        m.t = 7
        m.vocab_hash = "abc123"
        m.metadata = {"trainer": "test"}
        return m

    def test_round_trip_preserves_lambda(self, tmp_path):
        m = self.build()
        path = tmp_path / "model.json"
        m.save(path)
        loaded = VariationalModel.load(path)
        assert loaded.R == m.R
        assert loaded.feature_types == m.feature_types
        assert loaded.vocab_sizes == m.vocab_sizes
        npt.assert_allclose(loaded.eta, m.eta)
        assert loaded.alpha == m.alpha
        assert loaded.t == 7
        assert loaded.vocab_hash == "abc123"
        assert loaded.metadata == {"trainer": "test"}
        for f in range(m.F):
            npt.assert_allclose(loaded.dense_lambda(f), m.dense_lambda(f), rtol=1e-12)
            npt.assert_allclose(loaded.row_totals(f), m.row_totals(f), rtol=1e-12)

    def test_resave_is_byte_identical(self, tmp_path):
        m = self.build()
        m.save(tmp_path / "a.json")
        VariationalModel.load(tmp_path / "a.json").save(tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_untouched_entries_not_serialized(self):
        m = self.build()
        obj = m.to_json_obj()
        stored = sum(len(per_f[f]) for per_f in obj["lambda"] for f in range(m.F))
        assert stored == 3  # exactly the touched entries

    def test_rejects_wrong_format(self, tmp_path):
        obj = self.build().to_json_obj()
        obj["format"] = "something/9"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(DataError):
            VariationalModel.load(path)

    def test_rejects_lambda_below_eta(self, tmp_path):
        obj = self.build().to_json_obj()
        obj["lambda"][0][0]["0"] = 0.01  # below eta[0] = 0.5
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(DataError):
            VariationalModel.load(path)

    def test_rejects_out_of_range_value_id(self, tmp_path):
        obj = self.build().to_json_obj()
        obj["lambda"][0][0]["99"] = 2.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(DataError):
            VariationalModel.load(path)

    def test_rejects_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{broken")
        with pytest.raises(DataError):
            VariationalModel.load(path)


class TestAssignmentState:
    def test_assign_and_reassign(self):
        state = AssignmentState([2, 3], R=3)
        assert state.z[0][0] == -1
        state.assign(0, 0, 2)
        state.assign(0, 1, 2)
        npt.assert_array_equal(state.occupancy[0], [0, 0, 2])
        state.assign(0, 0, 1)  # reassignment moves the count
        npt.assert_array_equal(state.occupancy[0], [0, 1, 1])
        assert state.doc_totals.tolist() == [2.0, 0.0]

    def test_unassign(self):
        state = AssignmentState([1], R=2)
        state.assign(0, 0, 1)
        assert state.unassign(0, 0) == 1
        assert state.z[0][0] == -1
        npt.assert_array_equal(state.occupancy[0], [0, 0])
        assert state.unassign(0, 0) == -1  # idempotent on unassigned

    def test_negative_occupancy_detected(self):
        state = AssignmentState([1], R=2)
        state.assign(0, 0, 0)
        state.occupancy[0, 0] = 0.0  # corrupt
        with pytest.raises(NumericalError):
            state.unassign(0, 0)


class TestInitModel:
    def make(self, seed=0, feature_set="vb,ent_type"):
        corpus = corpus_from(
            [("d1", [{"vb": ["a", "b"], "ent_type": ["X-Y"]}]),
             ("d2", [{"vb": ["a"], "ent_type": ["X-Z", "X-Y"]}])],
            feature_set=feature_set,
        )
        return corpus, init_model(corpus, R=4, eta0=0.1, alpha0=0.5, seed=seed)

    def test_lambda_strictly_above_eta(self):
        _, m = self.make()
        for f in range(m.F):
            assert np.all(m.dense_lambda(f) > m.eta[f])

    def test_mass_scaled_to_token_count(self):
        corpus, m = self.make()
        total = sum(s.total_tokens for d in corpus.documents for s in d.sentences)
        for f in range(m.F):
            mass = m.row_scaled[f].sum()
            # sum of R*W Gamma(100, mean 1, sd 0.1) draws, each scaled by
            # total/(R*W): relative sd is 0.1/sqrt(R*W); allow 5 sigma
            tol = 5 * 0.1 / math.sqrt(m.R * m.vocab_sizes[f])
            assert abs(mass - total) / total < tol

    def test_deterministic_under_seed(self):
        _, a = self.make(seed=9)
        _, b = self.make(seed=9)
        for f in range(a.F):
            npt.assert_array_equal(a.dense_lambda(f), b.dense_lambda(f))
        _, c = self.make(seed=10)
        assert not np.array_equal(a.dense_lambda(0), c.dense_lambda(0))

    def test_records_vocab_hash(self):
        corpus, m = self.make()
        assert m.vocab_hash == corpus.vocab.content_hash()

    def test_empty_feature_type_left_at_prior(self):
        corpus = corpus_from(
            [("d1", [{"vb": ["a"]}])], feature_set="adj,vb",
        )
        m = init_model(corpus, R=2, eta0=0.1, alpha0=0.5, seed=0)
        f_adj = corpus.feature_types.index("adj")
        assert corpus.vocab.sizes[f_adj] == 0
        assert m.cols[f_adj] == {}
        assert m.dense_lambda(f_adj).shape == (2, 0)
