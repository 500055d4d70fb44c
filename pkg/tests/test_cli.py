import json
import subprocess
import sys

import pytest

from cider_eval import cli

BATCH = ('{"image_id": "1", "candidate": "a tall man rides", '
         '"references": ["a tall man rides a horse"]}\n'
         '{"image_id": "2", "candidate": "two dogs play", '
         '"references": ["two dogs play with a ball"]}\n')

TRIPLETS = ('{"references": ["a man walks his dog"], '
            '"b": "a man walks his dog", "c": "word word word", "vote": "B"}\n'
            '{"references": ["two dogs run in grass"], '
            '"b": "cat", "c": "two dogs run in grass", "vote": "C"}\n')


def run_cli(args):
    return cli.run(cli.parse_args(args))


@pytest.fixture()
def batch_file(tmp_path):
    path = tmp_path / "batch.jsonl"
    path.write_text(BATCH, encoding="utf-8")
    return path


@pytest.fixture()
def triplet_file(tmp_path):
    path = tmp_path / "triplets.jsonl"
    path.write_text(TRIPLETS, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def test_score_to_stdout(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"config", "corpus_mean", "df", "images", "version"}
    assert report["df"] == {"num_images": 2, "source": "self"}
    assert {img["image_id"] for img in report["images"]} == {"1", "2"}
    assert set(report["corpus_mean"]) == {"cider-r", "cider-d"}


def test_score_reruns_are_byte_identical(batch_file, tmp_path):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run_cli(["score", "--in", str(batch_file), "--out", str(out1)]) == 0
    assert run_cli(["score", "--in", str(batch_file), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes().endswith(b"\n")


def test_score_metric_selection(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file),
                    "--metrics", "bleu-4,rouge-l"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["corpus_mean"]) == {"bleu-4", "rouge-l"}
    assert "bleu_4_corpus" in report


def test_score_scale_flag(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file), "--scale", "10"]) == 0
    report = json.loads(capsys.readouterr().out)
    mean = report["corpus_mean"]["cider-d"]
    assert mean["reported"] == pytest.approx(10 * mean["raw"], abs=1e-12)
    assert report["config"]["report_scale"] == 10.0


def test_score_penalty_breakdown_flag(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file),
                    "--penalty-breakdown"]) == 0
    report = json.loads(capsys.readouterr().out)
    breakdown = report["images"][0]["scores"]["cider-r"]["penalties"]
    assert set(breakdown[0]) == {"gaussian", "length_pen", "repetition_pen",
                                 "combined"}


def test_score_csv_output(batch_file, tmp_path):
    out = tmp_path / "report.csv"
    assert run_cli(["score", "--in", str(batch_file), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "image_id,cider-r_reported,cider-d_reported"
    assert len(lines) == 3
    assert lines[1].startswith("1,")


def test_score_refs_file(tmp_path, capsys):
    batch = tmp_path / "cands.jsonl"
    batch.write_text('{"image_id": "1", "candidate": "a tall man rides"}\n'
                     '{"image_id": "2", "candidate": "two dogs play"}\n',
                     encoding="utf-8")
    refs = tmp_path / "refs.jsonl"
    refs.write_text('{"image_id": "1", "references": '
                    '["a tall man rides a horse"]}\n'
                    '{"image_id": "2", "references": '
                    '["two dogs play with a ball"]}\n', encoding="utf-8")
    assert run_cli(["score", "--in", str(batch), "--refs-file",
                    str(refs)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["images"]) == 2


def test_build_df_score_round_trip(batch_file, tmp_path, capsys):
    df_path = tmp_path / "corpus.df"
    assert run_cli(["build-df", "--in", str(batch_file), "--out",
                    str(df_path)]) == 0
    capsys.readouterr()

    out_self = tmp_path / "self.json"
    out_file = tmp_path / "file.json"
    assert run_cli(["score", "--in", str(batch_file), "--out",
                    str(out_self)]) == 0
    assert run_cli(["score", "--in", str(batch_file), "--df", str(df_path),
                    "--out", str(out_file)]) == 0
    self_report = json.loads(out_self.read_text())
    file_report = json.loads(out_file.read_text())
    assert file_report["df"]["source"] == "file"
    assert file_report["df"]["path"] == str(df_path)
    for self_img, file_img in zip(self_report["images"],
                                  file_report["images"]):
        for name in ("cider-r", "cider-d"):
            assert file_img["scores"][name]["raw"] == pytest.approx(
                self_img["scores"][name]["raw"], abs=1e-12)


# ---------------------------------------------------------------------------
# triplet-eval and sweep-kr
# ---------------------------------------------------------------------------


def test_triplet_eval_defaults(triplet_file, capsys):
    assert run_cli(["triplet-eval", "--in", str(triplet_file)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["num_refs_used"] == 1
    assert report["seed"] == 0
    names = [row["metric"] for row in report["results"]]
    assert names == ["cider-r", "cider-d", "bleu-4", "rouge-l"]
    for row in report["results"]:
        assert row["num_triplets"] == 2
        assert 0.0 <= row["accuracy"] <= 1.0


def test_triplet_eval_fixture_accuracy(fixtures_dir, triplet_expected,
                                       capsys):
    path = fixtures_dir / "triplet_pairs.jsonl"
    assert run_cli(["triplet-eval", "--in", str(path),
                    "--metrics", "cider-r", "--refs", "1", "--seed", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    row = report["results"][0]
    expected = triplet_expected["correct"]["cider-r"] / 15
    assert row["accuracy"] == pytest.approx(expected, abs=1e-12)


def test_sweep_kr_grid(triplet_file, capsys):
    assert run_cli(["sweep-kr", "--in", str(triplet_file),
                    "--kr", "0.0,0.5,1.0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [row["k_r"] for row in report["grid"]] == [0.0, 0.5, 1.0]
    assert report["objective"] == "triplet_accuracy"


def test_sweep_kr_default_grid(triplet_file, capsys):
    assert run_cli(["sweep-kr", "--in", str(triplet_file)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["grid"]) == 11
    assert report["grid"][0]["k_r"] == 0.0
    assert report["grid"][-1]["k_r"] == 1.0


def test_sweep_kr_accepts_batch_files(batch_file, capsys):
    assert run_cli(["sweep-kr", "--in", str(batch_file), "--kr",
                    "0.2,0.8"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["objective"] == "corpus_mean_raw"
    assert len(report["grid"]) == 2


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def test_stats_text_input(tmp_path, capsys):
    path = tmp_path / "caps.txt"
    path.write_text("a b\na b c d\n", encoding="utf-8")
    assert run_cli(["stats", "--in", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dataset_size"] == 2
    assert report["vocabulary_size"] == 4
    assert report["avg_sentence_length"] == 3.0
    assert report["std_sentence_length"] == 1.0


def test_stats_jsonl_input(batch_file, capsys):
    assert run_cli(["stats", "--in", str(batch_file)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dataset_size"] == 2  # two reference captions


# ---------------------------------------------------------------------------
# failure modes and exit codes
# ---------------------------------------------------------------------------


def test_missing_input_file_exits_2(tmp_path, capsys):
    assert run_cli(["score", "--in", str(tmp_path / "nope.jsonl")]) == 2
    assert "error" in capsys.readouterr().err


def test_malformed_line_exits_2_with_line_number(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"image_id": "1", "candidate": "a", '
                    '"references": ["a b"]}\n{broken\n', encoding="utf-8")
    assert run_cli(["score", "--in", str(path)]) == 2
    err = capsys.readouterr().err
    assert "2" in err and "bad.jsonl" in err


def test_unknown_metric_exits_1(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file),
                    "--metrics", "meteor"]) == 1
    assert "meteor" in capsys.readouterr().err


def test_bad_kr_grid_exits_1(triplet_file, capsys):
    assert run_cli(["sweep-kr", "--in", str(triplet_file),
                    "--kr", "0.5,high"]) == 1
    capsys.readouterr()


def test_out_of_range_sigma_exits_1(batch_file, capsys):
    assert run_cli(["score", "--in", str(batch_file), "--sigma", "-2"]) == 1
    capsys.readouterr()


def test_corrupt_df_file_exits_2(batch_file, tmp_path, capsys):
    df_path = tmp_path / "bad.df"
    df_path.write_text("wrong magic\n", encoding="utf-8")
    assert run_cli(["score", "--in", str(batch_file), "--df",
                    str(df_path)]) == 2
    capsys.readouterr()


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as excinfo:
        cli.parse_args(["score"])  # --in is required
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        cli.parse_args(["score", "--bogus-flag"])
    assert excinfo.value.code == 1


def test_parallelism_env_fallback(batch_file, tmp_path, monkeypatch):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("CIDER_EVAL_THREADS", "4")
    assert run_cli(["score", "--in", str(batch_file), "--out",
                    str(out1)]) == 0
    monkeypatch.setenv("CIDER_EVAL_THREADS", "1")
    assert run_cli(["score", "--in", str(batch_file), "--out",
                    str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_invalid_parallelism_env_exits_1(batch_file, monkeypatch, capsys):
    monkeypatch.setenv("CIDER_EVAL_THREADS", "lots")
    assert run_cli(["score", "--in", str(batch_file)]) == 1
    capsys.readouterr()


# ---------------------------------------------------------------------------
# installed entry point
# ---------------------------------------------------------------------------


def test_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "cider_eval.cli",
                          "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "cider-eval" in out.stdout


def test_entry_point_score(tmp_path):
    path = tmp_path / "batch.jsonl"
    path.write_text(BATCH, encoding="utf-8")
    out = subprocess.run([sys.executable, "-m", "cider_eval.cli", "score",
                          "--in", str(path)], capture_output=True, text=True)
    assert out.returncode == 0
    report = json.loads(out.stdout)
    assert report["df"]["num_images"] == 2
