import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from visemekit.analysis import (
    ambiguity_report,
    greedy_lower_bound,
    group_homovisemes,
    lower_bound_for,
    make_class,
)
from visemekit.corpus import VocabStats
from visemekit.errors import ContractViolation, DegenerateInputError
from visemekit.lexicon import identity_mapping, word_to_visemes


def stats(counts):
    return VocabStats(dict(counts), sum(counts.values()))


def exhaustive_min_wer(classes, total):
    """Try every joint choice of one output word per class."""
    best = max(sum(choice) for choice in itertools.product(*[[f for _, f in c.members] for c in classes]))
    return 1 - best / total


def random_instance(rng, max_words=15, max_classes=6):
    n_words = rng.randint(1, max_words)
    n_classes = rng.randint(1, min(max_classes, n_words))
    labels = [i % n_classes for i in range(n_words)]
    rng.shuffle(labels)
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append((f"W{i:02d}", rng.randint(1, 100)))
    classes = [make_class((f"K{k}",), m) for k, m in groups.items()]
    return classes, sum(f for c in classes for _, f in c.members)


def test_art_heart_fixture(lexicon, mapping):
    classes = group_homovisemes(stats({"ART": 5, "HEART": 3, "CAT": 2}), lexicon, mapping)
    by_rep = {c.representative: c for c in classes}
    assert set(by_rep) == {"ART", "CAT"}
    assert dict(by_rep["ART"].members) == {"ART": 5, "HEART": 3}
    report = greedy_lower_bound(classes, 10)
    assert report.wer_lb == pytest.approx(0.30, abs=1e-12)
    assert report.covered_tokens == 7
    assert report.wer_lb == pytest.approx(exhaustive_min_wer(classes, 10), abs=1e-12)


def test_singleton_and_tie_break(lexicon, mapping):
    assert len(group_homovisemes(stats({"A": 1}), lexicon, mapping)) == 1
    (cls,) = group_homovisemes(stats({"HEART": 3, "ART": 3}), lexicon, mapping)
    assert cls.representative == "ART"


def test_oov_in_stats(lexicon, mapping):
    with pytest.raises(ContractViolation):
        group_homovisemes(stats({"ZZXQ": 1}), lexicon, mapping)


def test_lower_bound_examples():
    singletons = [make_class((f"K{i}",), [(f"W{i}", i + 1)]) for i in range(4)]
    assert greedy_lower_bound(singletons, 10).wer_lb == 0
    one = [make_class(("K",), [("A", 1), ("B", 1), ("C", 1)])]
    assert greedy_lower_bound(one, 3).wer_lb == pytest.approx(2 / 3)
    assert exhaustive_min_wer(one, 3) == pytest.approx(2 / 3)
    with pytest.raises(DegenerateInputError):
        greedy_lower_bound([], 0)


def test_optimality_against_enumeration():
    rng = random.Random(11)
    for _ in range(300):
        classes, total = random_instance(rng)
        assert greedy_lower_bound(classes, total).wer_lb == exhaustive_min_wer(classes, total)


def test_partition_property(lexicon, mapping):
    words = ["ART", "HEART", "CAT", "BAT", "PAT", "MAT", "THE", "A", "MOM", "BOMB", "PAWN", "DAD", "TAD"]
    rng = random.Random(2)
    counts = {w: rng.randint(1, 50) for w in words}
    classes = group_homovisemes(stats(counts), lexicon, mapping)
    members = [w for c in classes for w, _ in c.members]
    assert sorted(members) == sorted(words)
    for c in classes:
        for w, _ in c.members:
            assert word_to_visemes(lexicon, mapping, w) == c.key
    keys = [c.key for c in classes]
    assert len(keys) == len(set(keys))


@settings(max_examples=200)
@given(st.integers(0, 10**6))
def test_merge_monotone(seed):
    rng = random.Random(seed)
    classes, total = random_instance(rng)
    if len(classes) < 2:
        return
    i, j = rng.sample(range(len(classes)), 2)
    merged = make_class(("M",), classes[i].members + classes[j].members)
    rest = [c for k, c in enumerate(classes) if k not in (i, j)] + [merged]
    assert greedy_lower_bound(rest, total).wer_lb >= greedy_lower_bound(classes, total).wer_lb


@settings(max_examples=200)
@given(st.integers(0, 10**6))
def test_zero_iff_concentrated(seed):
    rng = random.Random(seed)
    classes, total = random_instance(rng)
    if rng.random() < 0.5:
        classes = [make_class(c.key, [c.members[0]] + [(w, 0) for w, _ in c.members[1:]]) for c in classes]
        total = sum(c.mass for c in classes)
    concentrated = all(c.lost == 0 for c in classes)
    assert (greedy_lower_bound(classes, total).wer_lb == 0) == concentrated


def test_identity_mapping_gives_homophones(lexicon):
    words = ["RIGHT", "WRITE", "RITE", "WRIGHT", "TWO", "TOO", "TO", "ART", "HEART", "KNIGHT", "NIGHT"]
    counts = {w: i + 1 for i, w in enumerate(words)}
    classes = group_homovisemes(stats(counts), lexicon, identity_mapping(lexicon.inventory))
    got = sorted(sorted(w for w, _ in c.members) for c in classes)
    homophones = {}
    for w in words:
        homophones.setdefault(lexicon.entries[w], []).append(w)
    assert got == sorted(sorted(v) for v in homophones.values())


def test_ambiguity_report_examples():
    classes = [make_class(("K1",), [("ART", 5), ("HEART", 3)]), make_class(("K2",), [("CAT", 2)])]
    summary = ambiguity_report(classes)
    assert summary.size_histogram == {1: 1, 2: 1}
    assert [c.representative for c in summary.top] == ["ART"]
    singles = [make_class((f"K{i}",), [(f"W{i}", 1)]) for i in range(5)]
    assert ambiguity_report(singles).top == []


def test_ambiguity_report_random_recount():
    rng = random.Random(8)
    labels = [rng.randint(0, 39) for _ in range(100)]
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append((f"W{i}", rng.randint(1, 100)))
    classes = [make_class((str(k),), m) for k, m in groups.items()]
    summary = ambiguity_report(classes, top_k=5)
    recount = {}
    for members in groups.values():
        recount[len(members)] = recount.get(len(members), 0) + 1
    assert summary.size_histogram == recount
    assert sum(summary.size_histogram.values()) == len(classes)
    losses = [c.lost for c in summary.top]
    assert losses == sorted(losses, reverse=True)
    assert losses[0] == max(sum(f for _, f in m) - max(f for _, f in m) for m in groups.values())


def test_report_text(lexicon, mapping):
    report = lower_bound_for(stats({"ART": 5, "HEART": 3, "CAT": 2}), lexicon, mapping)
    text = report.to_text()
    assert "wer_lb = 0.3000" in text
    assert "mapping_name = lee-hh-null" in text
    assert "class = V_aa V_wr V_tdsz | ART:5 HEART:3 | ART" in text
