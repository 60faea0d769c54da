from collections import Counter, defaultdict

import numpy as np
import pytest

from visemekit.analysis import lower_bound_for
from visemekit.corpus import build_parallel_corpus, build_vocab_stats, split_corpus
from visemekit.errors import ConfigError
from visemekit.lexicon import word_to_visemes
from visemekit.metrics import corpus_error_rates
from visemekit.pipeline import inject_viseme_noise
from visemekit.seq2seq.model import ModelConfig, encode_pairs, init_model
from visemekit.seq2seq.train import TrainConfig, decode_all, train
from visemekit.seq2seq.vocab import TokenVocab
from visemekit.synthetic import build_grammar


@pytest.fixture(scope="module")
def grammar(lexicon, mapping):
    return build_grammar(lexicon, mapping)


def test_vocabulary_size(grammar):
    assert 480 <= len(grammar.vocabulary) <= 500


def test_no_collisions_within_a_category(grammar, lexicon, mapping):
    for cue, cat in zip(grammar.cues, grammar.slots):
        keys = [word_to_visemes(lexicon, mapping, w) for w in cat]
        assert len(set(keys)) == len(keys), cue


def test_slot_words_are_ambiguous_across_categories(grammar, lexicon, mapping):
    owners = defaultdict(set)
    for c, cat in enumerate(grammar.slots):
        for w in cat:
            owners[word_to_visemes(lexicon, mapping, w)].add(c)
    shared = [k for k, cs in owners.items() if len(cs) > 1]
    assert len(shared) > 50


def test_cue_plus_visemes_identifies_the_word(grammar, lexicon, mapping):
    # The oracle a context-aware decoder can reach: cue and slot visemes pin the word down.
    table = {}
    for cue, cat in zip(grammar.cues, grammar.slots):
        for w in cat:
            table[(cue, word_to_visemes(lexicon, mapping, w))] = w
    cue_keys = {word_to_visemes(lexicon, mapping, c) for c in grammar.cues}
    assert not cue_keys & {k for _, k in table}
    for sentence in grammar.generate(200, seed=5):
        cue = None
        for w in sentence.split():
            if w in grammar.cues:
                cue = w
            else:
                assert table[(cue, word_to_visemes(lexicon, mapping, w))] == w


def test_lower_bound_is_substantial(grammar, lexicon, mapping):
    sentences = grammar.generate(5000, seed=1)
    report = lower_bound_for(build_vocab_stats(sentences), lexicon, mapping)
    assert 0.25 < report.wer_lb < 0.55


def test_generate_is_seeded(grammar):
    assert grammar.generate(20, 3) == grammar.generate(20, 3)
    assert grammar.generate(20, 3) != grammar.generate(20, 4)
    lengths = Counter(len(s.split()) for s in grammar.generate(300, 0))
    assert set(lengths) == {3, 6, 9}


def test_bad_category_count(lexicon, mapping):
    with pytest.raises(ConfigError):
        build_grammar(lexicon, mapping, n_categories=1)


@pytest.mark.slow
def test_noise_does_not_help(lexicon, mapping):
    """Corrupting visemes at p=0.3 should not lower CER; majority over three seeds."""
    g = build_grammar(lexicon, mapping, vocab_size=120, n_categories=4)
    vocab = TokenVocab.for_visemes(mapping.visemes)
    votes = 0
    for seed in range(3):
        pc = split_corpus(build_parallel_corpus(g.generate(600, seed), lexicon, mapping), (0.9, 0.0, 0.1), seed)
        tr, te = pc.subset("train"), pc.subset("test")
        cfg = ModelConfig(vocab.source_size, vocab.target_size, embed_dim=16, hidden_dim=32, attention_dim=16, seed=seed)
        params, _ = train(
            init_model(cfg),
            vocab,
            encode_pairs(vocab, tr.sources, tr.targets),
            TrainConfig(learning_rate=5e-3, batch_size=32, epochs=4, seed=seed),
        )
        rng = np.random.default_rng(seed)
        noisy = [inject_viseme_noise(s, 0.3, mapping.visemes, rng) for s in te.sources]
        cers = [
            corpus_error_rates(zip(te.targets, decode_all(params, vocab, [vocab.encode_source(s) for s in srcs]))).cer
            for srcs in (te.sources, noisy)
        ]
        votes += cers[0] <= cers[1]
    assert votes >= 2
