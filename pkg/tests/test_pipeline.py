import json
from pathlib import Path

import numpy as np
import pytest

from visemekit import cli
from visemekit.errors import ConfigError, InputError
from visemekit.pipeline import (
    evaluate_split,
    inject_viseme_noise,
    load_config,
    parse_config,
    run_experiment,
)
from visemekit.corpus import read_parallel_tsv
from visemekit.seq2seq.checkpoint import load_checkpoint

TINY_CFG = """\
corpus = bundled:toy
output_dir = out
seed = 3
embed_dim = 4
hidden_dim = 8
attention_dim = 6
batch_size = 16
epochs = 2
learning_rate = 0.01
"""

ARTIFACTS = (
    "parallel.tsv",
    "prepare.txt",
    "lower_bound.txt",
    "model.ckpt",
    "train_log.jsonl",
    "eval_report.json",
    "samples.txt",
)


def write_cfg(tmp_path: Path, text: str = TINY_CFG, name: str = "exp.cfg") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("toy")
    cfg_path = write_cfg(tmp)
    assert cli.main(["all", "--config", str(cfg_path), "--quiet"]) == 0
    return tmp


# config ---------------------------------------------------------------------


def test_parse_config_types_and_paths(tmp_path):
    cfg = parse_config(TINY_CFG + "split_ratios = 0.7, 0.2, 0.1\nboundaries = yes\n", base_dir=tmp_path)
    assert cfg.split_ratios == (0.7, 0.2, 0.1)
    assert cfg.boundaries is True
    assert cfg.hidden_dim == 8 and isinstance(cfg.learning_rate, float)
    assert cfg.out == tmp_path / "out"


def test_parse_config_rejects_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown"):
        parse_config(TINY_CFG + "hiddn_dim = 3\n")
    with pytest.raises(ConfigError, match="output_dir"):
        parse_config("corpus = x.txt\n")
    with pytest.raises(ConfigError, match="epochs"):
        parse_config(TINY_CFG + "epochs = many\n")


def test_overrides_win(tmp_path):
    cfg = load_config(write_cfg(tmp_path), {"seed": 11, "epochs": None})
    assert cfg.seed == 11 and cfg.epochs == 2


@pytest.mark.parametrize(
    "extra",
    [
        "split_ratios = 0.5, 0.3, 0.1",
        "split_ratios = 0.5, 0.5",
        "noise_rate = 1.5",
        "decode_mode = sampling",
        "batch_size = 0",
        "teacher_forcing = 2",
    ],
)
def test_invalid_config_exits_1_without_artifacts(tmp_path, capsys, extra):
    cfg_path = write_cfg(tmp_path, TINY_CFG + extra + "\n")
    assert cli.main(["all", "--config", str(cfg_path)]) == 1
    assert not (tmp_path / "out").exists()
    assert "config error" in capsys.readouterr().err


def test_missing_corpus_is_a_validation_error(tmp_path):
    cfg_path = write_cfg(tmp_path, TINY_CFG.replace("bundled:toy", "nowhere.txt"))
    assert cli.main(["prepare", "--config", str(cfg_path)]) == 1
    assert cli.main(["prepare", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_runtime_failure_exits_2_and_names_stage(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path)
    assert cli.main(["train", "--config", str(cfg_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("visemekit: train failed:") and "prepare" in err


# analyze --------------------------------------------------------------------


def test_analyze_on_fixture_corpus(tmp_path):
    (tmp_path / "c.txt").write_text("Art\n" * 5 + "Heart\n" * 3 + "Cat\n" * 2, encoding="utf-8")
    cfg_path = write_cfg(tmp_path, "corpus = c.txt\noutput_dir = out\n")
    assert cli.main(["analyze", "--config", str(cfg_path), "--quiet"]) == 0
    text = (tmp_path / "out" / "lower_bound.txt").read_text()
    assert "wer_lb = 0.3000" in text
    assert "total_tokens = 10" in text and "covered_tokens = 7" in text
    assert "ART:5 HEART:3 | ART" in text


# end to end -----------------------------------------------------------------


def test_all_writes_every_artifact(toy_run):
    out = toy_run / "out"
    for name in ARTIFACTS:
        assert (out / name).is_file(), name
    prep = dict(line.split(" = ") for line in (out / "prepare.txt").read_text().splitlines())
    assert int(prep["kept"]) == int(prep["train"]) + int(prep["valid"]) + int(prep["test"])
    assert int(prep["rejected"]) >= 1 and int(prep["dropped_oov"]) >= 1
    log_lines = (out / "train_log.jsonl").read_text().splitlines()
    assert len(log_lines) == 2
    assert json.loads(log_lines[0])["wall_seconds"] is None
    report = json.loads((out / "eval_report.json").read_text())
    assert report["n_examples"] == int(prep["test"])
    assert report["cer"] == pytest.approx(report["char_errors"] / report["char_total"])


def test_all_is_byte_identical_across_runs(toy_run, tmp_path):
    cfg_path = write_cfg(tmp_path)
    assert cli.main(["all", "--config", str(cfg_path), "--quiet"]) == 0
    for name in ARTIFACTS:
        assert (tmp_path / "out" / name).read_bytes() == (toy_run / "out" / name).read_bytes(), name


def test_seed_override_changes_split(toy_run, tmp_path):
    cfg_path = write_cfg(tmp_path)
    assert cli.main(["prepare", "--config", str(cfg_path), "--seed", "4", "--quiet"]) == 0
    a = (tmp_path / "out" / "parallel.tsv").read_bytes()
    assert a != (toy_run / "out" / "parallel.tsv").read_bytes()


def test_zero_noise_matches_clean_evaluation(toy_run):
    cfg = load_config(toy_run / "exp.cfg")
    bundle = load_checkpoint(cfg.out / "model.ckpt")
    test = read_parallel_tsv(cfg.out / "parallel.tsv").subset("test")
    clean = json.loads((cfg.out / "eval_report.json").read_text())
    noisy = json.loads(evaluate_split(cfg, bundle, test, noise_rate=0.0).to_json())
    assert noisy == clean


def test_beam_mode_evaluates(toy_run):
    cfg = load_config(toy_run / "exp.cfg", {"decode_mode": "beam", "beam_width": 3})
    bundle = load_checkpoint(cfg.out / "model.ckpt")
    test = read_parallel_tsv(cfg.out / "parallel.tsv").subset("test")
    report = evaluate_split(cfg, bundle, test)
    assert report.n_examples == len(test.sources)


def test_decode_subcommand(toy_run, capsys):
    cfg_path = str(toy_run / "exp.cfg")
    assert cli.main(["decode", "--config", cfg_path, "--from-text", "the cat"]) == 0
    from_text = capsys.readouterr().out
    assert cli.main(["decode", "--config", cfg_path, "V_tdsz V_ah V_kgnl V_eh V_tdsz"]) == 0
    assert capsys.readouterr().out == from_text
    assert cli.main(["decode", "--config", cfg_path, "NOT_A_VISEME"]) == 2
    assert "decode failed" in capsys.readouterr().err


def test_run_experiment_rejects_unknown_stage(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    with pytest.raises(ConfigError):
        run_experiment(cfg, "deploy")


def test_empty_corpus_after_filtering(tmp_path):
    (tmp_path / "c.txt").write_text("123\nzzxqv\n", encoding="utf-8")
    cfg_path = write_cfg(tmp_path, "corpus = c.txt\noutput_dir = out\n")
    assert cli.main(["prepare", "--config", str(cfg_path), "--quiet"]) == 2
    cfg = load_config(cfg_path)
    with pytest.raises(InputError):
        run_experiment(cfg, "prepare", quiet=True)


# noise ----------------------------------------------------------------------

ALPHABET = [f"V{i}" for i in range(13)]


def test_noise_zero_is_identity():
    seq = tuple(ALPHABET * 3)
    assert inject_viseme_noise(seq, 0.0, ALPHABET, 0) == seq


def test_noise_one_changes_every_viseme_but_not_boundaries():
    seq = tuple(ALPHABET) + ("WB",) + tuple(ALPHABET)
    out = inject_viseme_noise(seq, 1.0, ALPHABET, 0)
    assert out[13] == "WB"
    assert all(a != b for a, b in zip(seq, out) if a != "WB")
    assert set(out) - {"WB"} <= set(ALPHABET)


def test_noise_rate_is_calibrated():
    rng = np.random.default_rng(0)
    seq = tuple(ALPHABET[i] for i in rng.integers(0, 13, 10_000))
    out = inject_viseme_noise(seq, 0.2, ALPHABET, 1)
    rate = sum(a != b for a, b in zip(seq, out)) / len(seq)
    assert 0.18 <= rate <= 0.22


def test_noise_is_seeded():
    seq = tuple(ALPHABET * 5)
    assert inject_viseme_noise(seq, 0.5, ALPHABET, 9) == inject_viseme_noise(seq, 0.5, ALPHABET, 9)


@pytest.mark.parametrize("p,alphabet", [(-0.1, ALPHABET), (1.01, ALPHABET), (0.1, ["V0"])])
def test_noise_rejects_bad_arguments(p, alphabet):
    with pytest.raises(ConfigError):
        inject_viseme_noise(("V0",), p, alphabet, 0)
