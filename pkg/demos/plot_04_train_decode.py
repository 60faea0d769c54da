"""
Training a viseme-to-character model
====================================

A small attention model learns to spell sentences from viseme
sequences. The corpus comes from a template grammar in which every
ambiguous word follows a cue that disambiguates it, so context is
worth something. Takes under a minute on one core.
"""

from visemekit.analysis import lower_bound_for
from visemekit.corpus import build_parallel_corpus, build_vocab_stats, split_corpus
from visemekit.lexicon import default_assets
from visemekit.metrics import corpus_error_rates
from visemekit.seq2seq.decode import beam_decode
from visemekit.seq2seq.model import ModelConfig, encode_pairs, init_model, param_count
from visemekit.seq2seq.train import TrainConfig, decode_all, train
from visemekit.seq2seq.vocab import TokenVocab
from visemekit.synthetic import build_grammar

lexicon, mapping = default_assets()
grammar = build_grammar(lexicon, mapping, vocab_size=150, n_categories=4)
sentences = grammar.generate(3000, seed=0)
print(sentences[:3])

bound = lower_bound_for(build_vocab_stats(sentences), lexicon, mapping).wer_lb
print(f"word-by-word lower bound: WER {bound:.3f}")

pc = split_corpus(build_parallel_corpus(sentences, lexicon, mapping), (0.8, 0.1, 0.1), seed=0)
train_set, valid_set, test_set = (pc.subset(s) for s in ("train", "valid", "test"))
vocab = TokenVocab.for_visemes(mapping.visemes)

cfg = ModelConfig(vocab.source_size, vocab.target_size, embed_dim=16, hidden_dim=64, attention_dim=32)
params = init_model(cfg)
print(f"{param_count(params)} parameters")

params, history = train(
    params,
    vocab,
    encode_pairs(vocab, train_set.sources, train_set.targets),
    TrainConfig(learning_rate=5e-3, batch_size=32, epochs=8),
    valid_pairs=encode_pairs(vocab, valid_set.sources, valid_set.targets),
    on_epoch=lambda r: print(f"epoch {r.epoch}: loss {r.train_loss:.3f}, valid CER {r.valid_cer:.3f}"),
)

hyps = decode_all(params, vocab, [vocab.encode_source(s) for s in test_set.sources])
report = corpus_error_rates(zip(test_set.targets, hyps))
print(f"test WER {report.wer:.3f} (bound {bound:.3f}), CER {report.cer:.3f}")

# Beam search ranks whole hypotheses by length-normalized log-probability.
src = vocab.encode_source(test_set.sources[0])
print(test_set.targets[0])
print(beam_decode(params, vocab, src, 4, 80))
