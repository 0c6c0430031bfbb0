"""Corpus, vocabulary, and count structures shared by all trainers.

A corpus is a JSON Lines file, one document per line:

    {"id": "<string>", "sentences": [{"features": {"<type>": ["<value>", ...]}}, ...]}

Feature type names come from a fixed registry; repeated values in a list
encode counts greater than one.  Documents hold sentences, sentences hold
one sparse count vector per active feature type, and value ids are dense
per-type integers assigned in first-occurrence order, so loading the same
file twice yields identical vocabularies.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, DataError
from .fileio import atomic_write_text

log = logging.getLogger(__name__)

# Fixed registry of recognized feature type names.
FEATURE_TYPES = (
    "adj",
    "adv",
    "ent_left",
    "ent_right",
    "nn",
    "oth",
    "pp",
    "vb",
    "pos_seq",
    "ent_type",
)

# Named subsets selectable via the feature_set config key.  "full" is the
# nine-type set used for headline experiments (no "nn"); "no-entities"
# additionally drops the entity surface strings.
FEATURE_SET_PRESETS = {
    "all": FEATURE_TYPES,
    "full": ("adj", "adv", "ent_left", "ent_right", "oth", "pp", "vb", "pos_seq", "ent_type"),
    "no-entities": ("adj", "adv", "oth", "pp", "vb", "pos_seq", "ent_type"),
}


def resolve_feature_set(feature_set=None):
    """Normalize a feature_set config value to a registry-ordered tuple.

    Accepts None (= all types), a preset name, a comma-separated string,
    or an iterable of type names.
    """
    if feature_set is None:
        return FEATURE_TYPES
    if isinstance(feature_set, str):
        if feature_set in FEATURE_SET_PRESETS:
            return FEATURE_SET_PRESETS[feature_set]
        names = [s.strip() for s in feature_set.split(",") if s.strip()]
    else:
        names = list(feature_set)
    for name in names:
        if name not in FEATURE_TYPES:
            raise ConfigError(f"unknown feature type {name!r}")
    if not names:
        raise ConfigError("feature_set selects no feature types")
    chosen = set(names)
    return tuple(t for t in FEATURE_TYPES if t in chosen)


class Vocabulary:
    """Per-feature-type bijection between value strings and dense ids."""

    def __init__(self, feature_types):
        self.feature_types = tuple(feature_types)
        self._index = {t: f for f, t in enumerate(self.feature_types)}
        self._str2id = [dict() for _ in self.feature_types]
        self._id2str = [list() for _ in self.feature_types]
        self.frozen = False

    @property
    def F(self):
        return len(self.feature_types)

    def type_index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"feature type {name!r} is not active in this vocabulary")

    def size(self, f):
        """Vocabulary size W_f for feature type index f."""
        return len(self._id2str[f])

    @property
    def sizes(self):
        return tuple(len(v) for v in self._id2str)

    def add(self, f, value):
        """Return the id for value under type f, extending unless frozen.

        Returns None for values unseen by a frozen vocabulary.
        """
        table = self._str2id[f]
        vid = table.get(value)
        if vid is None and not self.frozen:
            vid = len(table)
            table[value] = vid
            self._id2str[f].append(value)
        return vid

    def id_of(self, f, value):
        return self._str2id[f].get(value)

    def decode(self, f, vid):
        return self._id2str[f][vid]

    def freeze(self):
        self.frozen = True
        return self

    def content_hash(self):
        """Stable hash of the active types and every id assignment."""
        payload = json.dumps(
            {"feature_types": list(self.feature_types), "values": self._id2str},
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Sentence:
    """Sparse per-feature-type counts: counts[f] maps value id -> count."""

    counts: tuple

    @cached_property
    def token_arrays(self):
        """Per type: (value ids, counts) as numpy arrays, for the samplers."""
        out = []
        for c in self.counts:
            if c:
                vs = np.fromiter(c.keys(), dtype=np.int64, count=len(c))
                cs = np.fromiter(c.values(), dtype=np.float64, count=len(c))
            else:
                vs = np.empty(0, dtype=np.int64)
                cs = np.empty(0, dtype=np.float64)
            out.append((vs, cs))
        return tuple(out)

    @property
    def total_tokens(self):
        return sum(sum(c.values()) for c in self.counts)


@dataclass
class Document:
    id: str
    sentences: list

    @property
    def n_sentences(self):
        return len(self.sentences)


@dataclass
class Corpus:
    documents: list
    vocab: Vocabulary
    skipped_sentences: int = 0
    skipped_documents: int = 0

    @property
    def D(self):
        return len(self.documents)

    @property
    def F(self):
        return self.vocab.F

    @property
    def feature_types(self):
        return self.vocab.feature_types

    @property
    def n_sentences(self):
        return sum(d.n_sentences for d in self.documents)


def _parse_document(obj, line_no, vocab, drop_oov):
    if not isinstance(obj, dict):
        raise DataError(f"line {line_no}: document must be a JSON object")
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise DataError(f"line {line_no}: missing or invalid document id")
    raw_sentences = obj.get("sentences")
    if not isinstance(raw_sentences, list) or not raw_sentences:
        raise DataError(f"line {line_no}: document {doc_id!r} has no sentences")

    sentences = []
    dropped = 0
    for s_idx, raw in enumerate(raw_sentences):
        if not isinstance(raw, dict) or not isinstance(raw.get("features"), dict):
            raise DataError(f"line {line_no}: sentence {s_idx} lacks a features object")
        counts = tuple(dict() for _ in vocab.feature_types)
        for type_name, values in raw["features"].items():
            if type_name not in FEATURE_TYPES:
                raise DataError(f"line {line_no}: unknown feature type {type_name!r}")
            if type_name not in vocab._index:
                continue  # inactive under the selected feature set
            if not isinstance(values, list):
                raise DataError(f"line {line_no}: values for {type_name!r} must be a list")
            f = vocab.type_index(type_name)
            for value in values:
                if not isinstance(value, str):
                    raise DataError(f"line {line_no}: non-string value under {type_name!r}")
                vid = vocab.add(f, value)
                if vid is None:
                    continue  # OOV under a frozen vocabulary: dropped
                counts[f][vid] = counts[f].get(vid, 0) + 1
        if drop_oov and not any(counts):
            dropped += 1
            continue
        sentences.append(Sentence(counts))
    return doc_id, sentences, dropped


def parse_corpus(lines, feature_set=None, freeze_vocab=None, source="corpus"):
    """Parse an iterable of JSON Lines into a Corpus (see load_corpus)."""
    if freeze_vocab is not None:
        if feature_set is not None and resolve_feature_set(feature_set) != freeze_vocab.feature_types:
            raise ConfigError("feature_set conflicts with the frozen vocabulary")
        vocab = freeze_vocab
        if not vocab.frozen:
            raise ConfigError("freeze_vocab must be frozen")
    else:
        vocab = Vocabulary(resolve_feature_set(feature_set))

    drop_oov = freeze_vocab is not None
    documents = []
    skipped_sentences = 0
    skipped_documents = 0
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {line_no}: malformed JSON ({exc.msg})") from exc
        doc_id, sentences, dropped = _parse_document(obj, line_no, vocab, drop_oov)
        skipped_sentences += dropped
        if not sentences:
            skipped_documents += 1
            continue
        documents.append(Document(doc_id, sentences))

    if not documents:
        raise DataError(f"{source}: corpus contains no usable documents")
    if skipped_sentences or skipped_documents:
        log.warning(
            "dropped %d sentence(s) and %d whole document(s) with no in-vocabulary features",
            skipped_sentences,
            skipped_documents,
        )
    return Corpus(documents, vocab, skipped_sentences, skipped_documents)


def load_corpus(path, feature_set=None, freeze_vocab=None):
    """Load and validate a JSON Lines corpus.

    With freeze_vocab, values unseen by that vocabulary are dropped,
    sentences left empty by the dropping are skipped, and documents left
    empty are skipped; skip totals are logged and recorded on the Corpus.
    """
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh, feature_set=feature_set, freeze_vocab=freeze_vocab, source=str(path))


def _document_to_json(doc, vocab):
    sentences = []
    for sent in doc.sentences:
        features = {}
        for f, type_name in enumerate(vocab.feature_types):
            if not sent.counts[f]:
                continue
            values = []
            for vid, count in sent.counts[f].items():
                values.extend([vocab.decode(f, vid)] * count)
            features[type_name] = sorted(values)
        sentences.append({"features": features})
    return {"id": doc.id, "sentences": sentences}


def corpus_to_text(corpus):
    """Canonical serialization: registry-ordered types, sorted values."""
    lines = [
        json.dumps(_document_to_json(doc, corpus.vocab), ensure_ascii=False, separators=(",", ":"))
        for doc in corpus.documents
    ]
    return "".join(line + "\n" for line in lines)


def write_corpus(corpus, path):
    """Write the corpus in canonical form (atomic)."""
    atomic_write_text(path, corpus_to_text(corpus))
    return path


@dataclass
class CorpusStats:
    D: int
    n_sentences: int
    vocab_sizes: dict
    token_totals: dict
    total_tokens: int

    def as_dict(self):
        return {
            "documents": self.D,
            "sentences": self.n_sentences,
            "vocab_sizes": dict(self.vocab_sizes),
            "token_totals": dict(self.token_totals),
            "total_tokens": self.total_tokens,
        }


def corpus_stats(corpus):
    """Exact document/sentence/vocabulary/token counts."""
    totals = [0] * corpus.F
    n_sentences = 0
    for doc in corpus.documents:
        n_sentences += doc.n_sentences
        for sent in doc.sentences:
            for f, c in enumerate(sent.counts):
                totals[f] += sum(c.values())
    names = corpus.feature_types
    return CorpusStats(
        D=corpus.D,
        n_sentences=n_sentences,
        vocab_sizes={t: corpus.vocab.size(f) for f, t in enumerate(names)},
        token_totals={t: totals[f] for f, t in enumerate(names)},
        total_tokens=sum(totals),
    )


def _reencode(documents, old_vocab, new_vocab):
    """Re-encode documents under new_vocab, dropping OOV when it is frozen."""
    out_docs = []
    skipped_sentences = 0
    skipped_documents = 0
    for doc in documents:
        sentences = []
        for sent in doc.sentences:
            counts = tuple(dict() for _ in new_vocab.feature_types)
            for f, c in enumerate(sent.counts):
                for vid, count in c.items():
                    new_id = new_vocab.add(f, old_vocab.decode(f, vid))
                    if new_id is None:
                        continue
                    counts[f][new_id] = counts[f].get(new_id, 0) + count
            if new_vocab.frozen and not any(counts):
                skipped_sentences += 1
                continue
            sentences.append(Sentence(counts))
        if not sentences:
            skipped_documents += 1
            continue
        out_docs.append(Document(doc.id, sentences))
    return out_docs, skipped_sentences, skipped_documents


def split_corpus(corpus, eval_fraction, seed):
    """Disjoint train/eval partition by document, deterministic under seed.

    The eval side is re-encoded under the train vocabulary (frozen), so
    feature values unseen in training are dropped from eval sentences.
    """
    if not (0.0 < eval_fraction < 1.0):
        raise ConfigError("eval_fraction must lie strictly between 0 and 1")
    D = corpus.D
    n_eval = int(round(D * eval_fraction))
    if n_eval < 1 or n_eval > D - 1:
        raise ConfigError(
            f"eval_fraction={eval_fraction} leaves an empty split for D={D} documents"
        )
    rng = np.random.default_rng(seed)
    eval_ids = set(np.asarray(rng.permutation(D))[:n_eval].tolist())

    train_docs = [doc for i, doc in enumerate(corpus.documents) if i not in eval_ids]
    eval_docs = [doc for i, doc in enumerate(corpus.documents) if i in eval_ids]

    train_vocab = Vocabulary(corpus.feature_types)
    train_reenc, _, _ = _reencode(train_docs, corpus.vocab, train_vocab)
    train_vocab.freeze()
    train = Corpus(train_reenc, train_vocab)

    eval_reenc, skipped_s, skipped_d = _reencode(eval_docs, corpus.vocab, train_vocab)
    if not eval_reenc:
        raise DataError("evaluation split is empty after vocabulary filtering")
    if skipped_s or skipped_d:
        log.warning(
            "evaluation split: dropped %d sentence(s) and %d document(s) with no in-vocabulary features",
            skipped_s,
            skipped_d,
        )
    eval_corpus = Corpus(eval_reenc, train_vocab, skipped_s, skipped_d)
    return train, eval_corpus
