import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from quadgen import data_path, load_model
from quadgen.cli import main

MINI_TRAIN = data_path("mini_train.tsv")
MINI_DEV = data_path("mini_dev.tsv")
MINI_SCHEMA = data_path("mini.schema")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -------------------------------------------------------------- exit codes


def test_help_exits_zero(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    assert "stats" in out and "trie-dump" in out


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run(capsys, "stats", "--no-such-flag")
    assert code == 1


def test_missing_input_file_is_data_error(capsys):
    code, _, err = run(capsys, "stats", "--train", "/nonexistent/x.tsv")
    assert code == 2
    assert "error:" in err


def test_divergent_training_is_numeric_error(capsys, tmp_path):
    vocab = tmp_path / "v.txt"
    code, _, _ = run(capsys, "build-vocab", "--data", MINI_TRAIN, "--out", str(vocab))
    assert code == 0
    code, _, err = run(
        capsys, "train-lcd", "--data", MINI_TRAIN, "--vocab", str(vocab),
        "--schema", MINI_SCHEMA, "--dim", "16", "--hidden", "16",
        "--epochs", "2", "--lr", "1e9", "--out", str(tmp_path / "p.bin"),
    )
    assert code == 3
    assert "diverged" in err


# ---------------------------------------------------------------- commands


def test_stats_table(capsys):
    code, out, _ = run(
        capsys, "stats", "--train", MINI_TRAIN, "--dev", MINI_DEV, "--name", "mini"
    )
    assert code == 0
    assert "mini: samples / quadruples per split" in out
    assert "train" in out and "dev" in out
    # 50 train + 8 dev samples, 157 + 24 quadruples
    assert "    58      181" in out
    assert "implicit-element partition" in out


def test_build_vocab_reports_size(capsys, tmp_path):
    out_path = tmp_path / "vocab.txt"
    code, out, _ = run(capsys, "build-vocab", "--data", MINI_TRAIN, "--out", str(out_path))
    assert code == 0
    words = [w for w in out_path.read_text().splitlines() if w]
    assert words == sorted(words)
    assert f"{len(words)} words -> {out_path}" in out


def test_trie_dump_selects_sections(capsys):
    code, out, _ = run(capsys, "trie-dump")
    assert code == 0
    assert "categories:" in out and "sentiments:" in out
    assert "FOOD*" in out

    code, out, _ = run(capsys, "trie-dump", "--which", "sentiments")
    assert code == 0
    assert "categories:" not in out
    leaves = [line for line in out.splitlines() if line.endswith("*")]
    assert leaves == ["NEGATIVE*", "NEUTRAL*", "POSITIVE*"]


def _train_lcd(capsys, tmp_path, *extra):
    vocab = tmp_path / "vocab.txt"
    if not vocab.exists():
        assert run(capsys, "build-vocab", "--data", MINI_TRAIN, "--out", str(vocab))[0] == 0
    return run(
        capsys, "train-lcd", "--data", MINI_TRAIN, "--vocab", str(vocab),
        "--schema", MINI_SCHEMA, "--dim", "16", "--hidden", "16",
        "--out", str(tmp_path / "lcd.bin"), *extra,
    )


def test_train_lcd_history_rows_match_epochs(capsys, tmp_path):
    history = tmp_path / "hist.csv"
    code, out, _ = _train_lcd(capsys, tmp_path, "--epochs", "3", "--history", str(history))
    assert code == 0
    assert "epochs=3" in out
    with open(history, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert rows[0]["epoch"] == "0" and float(rows[0]["mean_neg_elbo"]) > 0


def test_config_file_seeds_options_and_flags_win(capsys, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[quadgen]\nepochs = 4\nlr = 0.1\n")
    history = tmp_path / "hist.csv"

    code, out, _ = _train_lcd(capsys, tmp_path, "--config", str(ini),
                              "--history", str(history))
    assert code == 0 and "epochs=4" in out
    with open(history, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 4

    code, out, _ = _train_lcd(capsys, tmp_path, "--config", str(ini),
                              "--epochs", "2", "--history", str(history))
    assert code == 0 and "epochs=2" in out
    with open(history, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2


def test_unknown_config_key_is_rejected(capsys, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[quadgen]\nepochz = 4\n")
    code, _, err = _train_lcd(capsys, tmp_path, "--config", str(ini))
    assert code == 2
    assert "epochz" in err


def test_infer_lcd_emits_simplex_rows(capsys, tmp_path):
    code, _, _ = _train_lcd(capsys, tmp_path, "--epochs", "2")
    assert code == 0
    z_path = tmp_path / "z.csv"
    code, _, _ = run(
        capsys, "infer-lcd", "--params", str(tmp_path / "lcd.bin"),
        "--vocab", str(tmp_path / "vocab.txt"), "--data", MINI_TRAIN,
        "--emit-z", str(z_path),
    )
    assert code == 0
    with open(z_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50
    assert set(rows[0]) == {"z0", "z1", "z2", "z3"}
    for row in rows:
        assert abs(sum(float(v) for v in row.values()) - 1.0) < 1e-4


TINY_TRAIN_FLAGS = (
    "--dim", "8", "--dec-hidden", "8", "--hidden", "8", "--max-pos", "40",
    "--lcd-pretrain-epochs", "1", "--gen-epochs", "1", "--lcd-epochs", "1",
    "--rounds", "1", "--seed", "5",
)


def test_train_is_deterministic_across_runs(capsys, tmp_path):
    for name in ("a", "b"):
        code, out, _ = run(
            capsys, "train", "--data", MINI_TRAIN, "--schema", MINI_SCHEMA,
            "--out", str(tmp_path / name), *TINY_TRAIN_FLAGS,
        )
        assert code == 0
        assert "saved to" in out
    a = (tmp_path / "a" / "params.bin").read_bytes()
    b = (tmp_path / "b" / "params.bin").read_bytes()
    assert a == b
    model = load_model(tmp_path / "a")
    assert model.config.dim == 8 and model.config.seed == 5


def test_oracle_decode_then_eval_is_perfect(capsys, tmp_path):
    pred = tmp_path / "pred.txt"
    gold = tmp_path / "gold.txt"
    code, out, _ = run(
        capsys, "decode", "--scorer", "oracle", "--schema", MINI_SCHEMA,
        "--data", MINI_DEV, "--out", str(pred), "--emit-gold", str(gold),
    )
    assert code == 0
    assert "8 sequences" in out

    csv_path = tmp_path / "report.csv"
    code, out, _ = run(
        capsys, "eval", "--pred", str(pred), "--gold", str(gold),
        "--schema", MINI_SCHEMA, "--csv", str(csv_path),
    )
    assert code == 0
    all_row = next(line for line in out.splitlines() if line.startswith("ALL"))
    assert all_row.count("1.0000") == 3
    with open(csv_path, newline="") as fh:
        rows = {r["subset"]: r for r in csv.DictReader(fh)}
    assert rows["ALL"]["f1"] == "1.000000"


def test_eval_rejects_mismatched_line_counts(capsys, tmp_path):
    pred = tmp_path / "pred.txt"
    gold = tmp_path / "gold.txt"
    code, _, _ = run(
        capsys, "decode", "--scorer", "oracle", "--schema", MINI_SCHEMA,
        "--data", MINI_DEV, "--out", str(pred), "--emit-gold", str(gold),
    )
    assert code == 0
    lines = gold.read_text().splitlines()
    gold.write_text("\n".join(lines[:-1]) + "\n")
    code, _, err = run(
        capsys, "eval", "--pred", str(pred), "--gold", str(gold),
        "--schema", MINI_SCHEMA,
    )
    assert code == 2
    assert "lines" in err


def test_random_decode_is_valid_but_imperfect(capsys, tmp_path):
    pred = tmp_path / "pred.txt"
    gold = tmp_path / "gold.txt"
    code, _, _ = run(
        capsys, "decode", "--scorer", "random", "--seed", "3", "--schema", MINI_SCHEMA,
        "--data", MINI_DEV, "--out", str(pred), "--emit-gold", str(gold),
        "--max-len", "24",
    )
    assert code == 0
    code, out, _ = run(
        capsys, "eval", "--pred", str(pred), "--gold", str(gold), "--schema", MINI_SCHEMA
    )
    # every random sequence still parses, it just scores poorly
    assert code == 0
    all_row = next(line for line in out.splitlines() if line.startswith("ALL"))
    assert "1.0000" not in all_row


# ----------------------------------------------------------------- logging


def test_run_line_carries_config_hash_and_seed(capsys, caplog):
    caplog.set_level("INFO", logger="quadgen")
    code, _, _ = run(capsys, "trie-dump", "--which", "sentiments")
    assert code == 0
    line = next(r.message for r in caplog.records if r.message.startswith("command="))
    assert "command=trie-dump" in line
    config_hash = line.split("config=")[1].split()[0]
    assert len(config_hash) == 16
    assert "seed=-" in line


def test_log_env_var_controls_verbosity(tmp_path):
    env = dict(os.environ, QUADGEN_LOG="INFO")
    proc = subprocess.run(
        [sys.executable, "-m", "quadgen", "trie-dump", "--which", "sentiments"],
        capture_output=True, text=True, env=env, cwd="/",
    )
    assert proc.returncode == 0
    assert "INFO quadgen: command=trie-dump" in proc.stderr

    env["QUADGEN_LOG"] = "WARNING"
    quiet = subprocess.run(
        [sys.executable, "-m", "quadgen", "trie-dump", "--which", "sentiments"],
        capture_output=True, text=True, env=env, cwd="/",
    )
    assert quiet.returncode == 0
    assert "command=trie-dump" not in quiet.stderr
