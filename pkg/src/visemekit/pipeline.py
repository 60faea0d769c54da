"""Config-driven experiment stages: prepare, analyze, train, evaluate.

One flat ``key = value`` file describes a whole experiment.  Relative paths
are resolved against the config file's directory, and ``bundled`` selects
the assets shipped with the package.  Every source of randomness derives
from the single ``seed`` key, so a fixed config reproduces its artifacts
byte for byte.

Artifacts written to ``output_dir``:

=====================  =====================================================
``parallel.tsv``        visemes<TAB>text<TAB>split, one example per line
``prepare.txt``         line counts through normalization and filtering
``lower_bound.txt``     greedy word-level lower bound (key = value)
``model.ckpt``          binary checkpoint of the best epoch
``train_log.jsonl``     one JSON record per epoch
``eval_report.json``    corpus WER/CER and per-sentence breakdowns
``samples.txt``         ground truth / prediction table, wrong words bracketed
=====================  =====================================================
"""

from __future__ import annotations

import configparser
import json
import logging
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, corpus, lexicon
from .errors import ConfigError, InputError, VisemeKitError
from .lexicon import WORD_BOUNDARY, Lexicon, VisemeMapping
from .metrics import EvalReport, align, corpus_error_rates
from .seq2seq.checkpoint import load_checkpoint, save_checkpoint
from .seq2seq.decode import beam_decode
from .seq2seq.model import ModelConfig, encode_pairs, init_model
from .seq2seq.train import TrainConfig, decode_all, default_max_len, train

log = logging.getLogger(__name__)

STAGES = ("prepare", "analyze", "train", "evaluate")
BUNDLED = "bundled"
BUNDLED_TOY = "bundled:toy"


def inject_viseme_noise(seq: Sequence[str], p: float, alphabet: Sequence[str], rng) -> tuple[str, ...]:
    """Replace each viseme, with probability ``p``, by a different random one.

    ``rng`` is a seed or a numpy Generator.  Word-boundary tokens and other
    symbols outside ``alphabet`` pass through untouched.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"noise rate must lie in [0, 1], got {p}")
    alphabet = list(alphabet)
    if p > 0 and len(alphabet) < 2:
        raise ConfigError("noise needs at least two visemes to substitute between")
    rng = np.random.default_rng(rng)
    out = []
    for tok in seq:
        hit = rng.random() < p
        if hit and tok in alphabet and tok != WORD_BOUNDARY:
            others = [v for v in alphabet if v != tok]
            tok = others[int(rng.integers(len(others)))]
        out.append(tok)
    return tuple(out)


@dataclass
class ExperimentConfig:
    corpus: str
    output_dir: str
    dictionary: str = BUNDLED
    mapping: str = BUNDLED
    sample_size: int = 0
    seed: int = 0
    split_ratios: tuple = (0.8, 0.1, 0.1)
    boundaries: bool = False
    embed_dim: int = 32
    hidden_dim: int = 128
    attention_dim: int = 64
    encoder_layers: int = 2
    init_scale: float = 1.0
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    teacher_forcing: float = 1.0
    clip_norm: float = 5.0
    precision: str = "standard"
    patience: int = 0
    decode_mode: str = "greedy"
    beam_width: int = 4
    max_len: int = 0
    noise_rate: float = 0.0
    top_k: int = 10
    n_samples: int = 6
    log_wall_time: bool = False
    base_dir: str = field(default=".", repr=False)

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    def model_config(self, vocab) -> ModelConfig:
        return ModelConfig(
            source_vocab=vocab.source_size,
            target_vocab=vocab.target_size,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            attention_dim=self.attention_dim,
            encoder_layers=self.encoder_layers,
            init_scale=self.init_scale,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            teacher_forcing=self.teacher_forcing,
            clip_norm=self.clip_norm,
            seed=self.seed,
            precision=self.precision,
            patience=self.patience,
            decode_max_len=self.max_len,
        )

    def validate(self, stages: Sequence[str] = STAGES) -> "ExperimentConfig":
        corpus.check_ratios(self.split_ratios)
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise_rate must lie in [0, 1]")
        if self.decode_mode not in ("greedy", "beam"):
            raise ConfigError("decode_mode must be 'greedy' or 'beam'")
        if self.beam_width < 1 or self.sample_size < 0 or self.max_len < 0:
            raise ConfigError("beam_width must be >= 1; sample_size and max_len >= 0")
        if self.encoder_layers != 2:
            log.warning("encoder_layers=%d differs from the two-layer reference", self.encoder_layers)
        for name in ("embed_dim", "hidden_dim", "attention_dim", "encoder_layers", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        self.train_config().validate()
        needs_corpus = {"prepare", "analyze"} & set(stages)
        if needs_corpus and self.corpus != BUNDLED_TOY and not self.path(self.corpus).is_file():
            raise ConfigError(f"corpus file not found: {self.path(self.corpus)}")
        for key in ("dictionary", "mapping"):
            value = getattr(self, key)
            if value != BUNDLED and not self.path(value).is_file():
                raise ConfigError(f"{key} file not found: {self.path(value)}")
        return self


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_config(text: str, base_dir=".", overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat ``key = value`` text (``#`` comments) into a config."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}".splitlines()[0]) from None
    raw = dict(cp["experiment"])
    raw.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    known = {f.name: f for f in fields(ExperimentConfig) if f.name != "base_dir"}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for required in ("corpus", "output_dir"):
        if required not in raw:
            raise ConfigError(f"missing required key {required!r}")
    values = {}
    for key, value in raw.items():
        default = ExperimentConfig.__dataclass_fields__[key].default
        try:
            if key == "split_ratios":
                values[key] = tuple(float(x) for x in value.replace(",", " ").split())
            elif isinstance(default, bool):
                values[key] = _parse_bool(value)
            elif isinstance(default, int):
                values[key] = int(value)
            elif isinstance(default, float):
                values[key] = float(value)
            else:
                values[key] = value.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return ExperimentConfig(**values, base_dir=str(base_dir))


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.parent, overrides)


# stages ---------------------------------------------------------------------


@dataclass
class Context:
    cfg: ExperimentConfig
    lexicon: Lexicon
    mapping: VisemeMapping
    quiet: bool = False
    current: str = ""

    def say(self, text: str):
        if not self.quiet:
            print(text, end="" if text.endswith("\n") else "\n")


def load_assets(cfg: ExperimentConfig) -> tuple[Lexicon, VisemeMapping]:
    lex = lexicon.load_lexicon(None if cfg.dictionary == BUNDLED else cfg.path(cfg.dictionary))
    mp = lexicon.load_mapping(lex.inventory, None if cfg.mapping == BUNDLED else cfg.path(cfg.mapping))
    return lex, mp


def _raw_lines(cfg: ExperimentConfig):
    if cfg.corpus == BUNDLED_TOY:
        text = (resources.files("visemekit") / "data" / "toy_corpus.txt").read_text(encoding="utf-8")
        yield from text.splitlines()
        return
    with open(cfg.path(cfg.corpus), encoding="utf-8", errors="replace") as fh:
        yield from fh


def load_sentences(ctx: Context) -> tuple[list[str], dict]:
    """Normalized, lexicon-filtered (and optionally sampled) sentences."""
    counts = {"raw_lines": 0, "rejected": 0, "dropped_oov": 0}

    def stream():
        for line in _raw_lines(ctx.cfg):
            counts["raw_lines"] += 1
            s = corpus.normalize_sentence(line)
            if s is None:
                counts["rejected"] += 1
            elif not corpus.in_lexicon(s, ctx.lexicon):
                counts["dropped_oov"] += 1
            else:
                yield s

    if ctx.cfg.sample_size:
        sentences = corpus.reservoir_sample(stream(), ctx.cfg.sample_size, ctx.cfg.seed)
    else:
        sentences = list(stream())
    counts["kept"] = len(sentences)
    return sentences, counts


def stage_prepare(ctx: Context):
    sentences, counts = load_sentences(ctx)
    if not sentences:
        raise InputError("no sentences survive normalization and lexicon filtering")
    pc = corpus.build_parallel_corpus(sentences, ctx.lexicon, ctx.mapping, ctx.cfg.boundaries)
    pc = corpus.split_corpus(pc, ctx.cfg.split_ratios, ctx.cfg.seed)
    corpus.write_parallel_tsv(pc, ctx.cfg.out / "parallel.tsv")
    sizes = {s: pc.splits.count(s) for s in corpus.SPLITS}
    lines = [f"{k} = {v}" for k, v in counts.items()] + [f"{k} = {v}" for k, v in sizes.items()]
    lines.append(f"mapping = {ctx.mapping.name} {ctx.mapping.version}")
    lines.append(f"normalization = v{corpus.NORMALIZATION_VERSION}")
    (ctx.cfg.out / "prepare.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    ctx.say(f"prepare: kept {counts['kept']} of {counts['raw_lines']} lines "
            f"(train {sizes['train']}, valid {sizes['valid']}, test {sizes['test']})")


def stage_analyze(ctx: Context):
    sentences, _ = load_sentences(ctx)
    stats = corpus.build_vocab_stats(sentences)
    report = analysis.lower_bound_for(stats, ctx.lexicon, ctx.mapping)
    (ctx.cfg.out / "lower_bound.txt").write_text(report.to_text(), encoding="utf-8")
    summary = analysis.ambiguity_report(report.classes, ctx.cfg.top_k)
    ctx.say(f"analyze: {len(stats.counts)} word types, {stats.total_tokens} tokens, "
            f"greedy lower-bound WER {report.wer_lb:.4f} ({100 * report.wer_lb:.2f}%)")
    ctx.say(summary.to_table())
    return report


def _read_prepared(ctx: Context) -> corpus.ParallelCorpus:
    path = ctx.cfg.out / "parallel.tsv"
    if not path.is_file():
        raise InputError(f"{path} not found; run the prepare stage first")
    return corpus.read_parallel_tsv(path)


def make_vocab(ctx: Context):
    from .seq2seq.vocab import TokenVocab

    return TokenVocab.for_visemes(ctx.mapping.visemes, ctx.cfg.boundaries)


def stage_train(ctx: Context):
    pc = _read_prepared(ctx)
    vocab = make_vocab(ctx)
    tr, va = pc.subset("train"), pc.subset("valid")
    train_pairs = encode_pairs(vocab, tr.sources, tr.targets)
    valid_pairs = encode_pairs(vocab, va.sources, va.targets)
    mcfg = ctx.cfg.model_config(vocab)
    tcfg = ctx.cfg.train_config()
    params = init_model(mcfg, dtype=tcfg.dtype)
    records = []

    def on_epoch(rec):
        d = rec.to_dict()
        if not ctx.cfg.log_wall_time:
            d["wall_seconds"] = None
        records.append(json.dumps(d, sort_keys=True))
        cer = "n/a" if rec.valid_cer is None else f"{rec.valid_cer:.4f}"
        ctx.say(f"train: epoch {rec.epoch} loss {rec.train_loss:.4f} valid CER {cer}")

    best, _ = train(params, vocab, train_pairs, tcfg, valid_pairs or None, on_epoch)
    save_checkpoint(best, mcfg, vocab, ctx.cfg.out / "model.ckpt")
    (ctx.cfg.out / "train_log.jsonl").write_text("".join(r + "\n" for r in records), encoding="utf-8")


def decode_sources(cfg: ExperimentConfig, params, vocab, sources) -> list[str]:
    ids = [vocab.encode_source(s) for s in sources]
    if cfg.decode_mode == "beam":
        return [beam_decode(params, vocab, s, cfg.beam_width, cfg.max_len or default_max_len(len(s))) for s in ids]
    return decode_all(params, vocab, ids, cfg.max_len)


def noisy_sources(sources, p: float, alphabet, seed: int):
    rng = np.random.default_rng([seed, 7])
    return [inject_viseme_noise(s, p, alphabet, rng) for s in sources]


def format_samples(pairs, n: int) -> str:
    """Two-column ground truth / prediction table; wrong words in brackets."""
    rows = []
    for ref, hyp in pairs[:n]:
        r, h = ref.split(), hyp.split()
        marked = list(h)
        for op, _, j in align(r, h):
            if op in "SI":
                marked[j] = f"[{h[j]}]"
        rows.append((ref, " ".join(marked) if marked else "[]"))
    width = max([len("Ground Truth")] + [len(a) for a, _ in rows])
    lines = [f"{'Ground Truth':<{width}} | Predicted", f"{'-' * width}-+-{'-' * 9}"]
    lines += [f"{a:<{width}} | {b}" for a, b in rows]
    return "\n".join(lines) + "\n"


def evaluate_split(cfg: ExperimentConfig, bundle, pc: corpus.ParallelCorpus, noise_rate: float | None = None) -> EvalReport:
    p = cfg.noise_rate if noise_rate is None else noise_rate
    alphabet = [t for t in bundle.vocab.source_tokens if t != WORD_BOUNDARY]
    sources = noisy_sources(pc.sources, p, alphabet, cfg.seed) if p > 0 else pc.sources
    hyps = decode_sources(cfg, bundle.params, bundle.vocab, sources)
    return corpus_error_rates(zip(pc.targets, hyps), model_id=f"seed={cfg.seed} noise={p}")


def stage_evaluate(ctx: Context):
    ckpt = ctx.cfg.out / "model.ckpt"
    if not ckpt.is_file():
        raise InputError(f"{ckpt} not found; run the train stage first")
    bundle = load_checkpoint(ckpt)
    pc = _read_prepared(ctx)
    split = "test" if "test" in pc.splits else "valid"
    report = evaluate_split(ctx.cfg, bundle, pc.subset(split))
    (ctx.cfg.out / "eval_report.json").write_text(report.to_json(), encoding="utf-8")
    table = format_samples([(r["ref"], r["hyp"]) for r in report.per_sentence], ctx.cfg.n_samples)
    (ctx.cfg.out / "samples.txt").write_text(table, encoding="utf-8")
    ctx.say(f"evaluate ({split}, {report.n_examples} sentences, noise {ctx.cfg.noise_rate}): "
            f"WER {report.wer:.4f} CER {report.cer:.4f}")
    ctx.say(table)
    return report


_RUNNERS = {
    "prepare": stage_prepare,
    "analyze": stage_analyze,
    "train": stage_train,
    "evaluate": stage_evaluate,
}


def run_experiment(cfg: ExperimentConfig, stage: str = "all", quiet: bool = False) -> Context:
    """Validate everything first, then run ``stage`` (or all four in order)."""
    stages = STAGES if stage == "all" else (stage,)
    if stage != "all" and stage not in _RUNNERS:
        raise ConfigError(f"unknown stage {stage!r}")
    cfg.validate(stages)
    lex, mp = load_assets(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, lex, mp, quiet)
    for s in stages:
        ctx.current = s
        try:
            _RUNNERS[s](ctx)
        except (VisemeKitError, OSError) as exc:
            exc.__stage__ = s
            raise
    return ctx


def decode_line(cfg: ExperimentConfig, line: str, from_text: bool = False) -> str:
    """Decode one line of space-separated visemes (or plain text if ``from_text``)."""
    ckpt = cfg.out / "model.ckpt"
    if not ckpt.is_file():
        raise InputError(f"{ckpt} not found; run the train stage first")
    bundle = load_checkpoint(ckpt)
    if from_text:
        lex, mp = load_assets(cfg)
        sentence = corpus.normalize_sentence(line)
        if sentence is None:
            raise InputError("input line is empty or contains digits")
        tokens = lexicon.sentence_to_visemes(lex, mp, sentence, cfg.boundaries)
    else:
        tokens = tuple(line.split())
    if not tokens:
        raise InputError("nothing to decode")
    return decode_sources(cfg, bundle.params, bundle.vocab, [tokens])[0]
