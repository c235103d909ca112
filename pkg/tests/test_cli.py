import hashlib
import json
from pathlib import Path

import pytest

from sublm.cli import main

DATA_DIR = Path(__file__).parent.parent / "data" / "miniature"


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def tiny_files(tmp_path_factory):
    """Small corpus files derived from the miniature fixtures."""
    root = tmp_path_factory.mktemp("clidata")
    train_lines = (DATA_DIR / "train.txt").read_text(encoding="utf-8").splitlines()
    (root / "train.txt").write_text("\n".join(train_lines[:800]) + "\n", encoding="utf-8")
    (root / "more.txt").write_text("\n".join(train_lines[800:1600]) + "\n", encoding="utf-8")
    (root / "valid.txt").write_text("\n".join(train_lines[1600:1850]) + "\n", encoding="utf-8")
    (root / "eval.txt").write_text("\n".join(train_lines[1850:2100]) + "\n", encoding="utf-8")
    return root


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestTokenizeCommands:
    def test_train_bpe_writes_consistent_header(self, tiny_files, tmp_path, capsys):
        out = tmp_path / "model.bpe"
        code, stdout, _ = run(
            ["tokenize", "train", "--algo", "bpe", "--inventory", "120",
             "--in", str(tiny_files / "train.txt"), "--out", str(out)], capsys
        )
        assert code == 0
        payload = json.loads(stdout)
        header = out.read_text(encoding="utf-8").splitlines()[0]
        fields = dict(kv.split("=") for kv in header.split()[2:])
        assert int(fields["alphabet"]) + int(fields["merges"]) == payload["inventory"]
        assert (tmp_path / "model.bpe.manifest.json").exists()

    def test_inventory_smaller_than_alphabet_exits_2(self, tiny_files, tmp_path, capsys):
        code, _, err = run(
            ["tokenize", "train", "--algo", "bpe", "--inventory", "3",
             "--in", str(tiny_files / "train.txt"), "--out", str(tmp_path / "x.bpe")], capsys
        )
        assert code == 2
        assert "inventory too small" in err

    def test_repeated_run_same_seed_identical_bytes(self, tiny_files, tmp_path, capsys):
        digests = []
        for name in ("a.bpe", "b.bpe"):
            out = tmp_path / name
            code, _, _ = run(
                ["--seed", "4", "tokenize", "train", "--algo", "bpe", "--inventory",
                 "120", "--in", str(tiny_files / "train.txt"), "--out", str(out)], capsys
            )
            assert code == 0
            digests.append(sha256(out))
        assert digests[0] == digests[1]

    def test_morfessor_train_and_apply(self, tiny_files, tmp_path, capsys):
        model = tmp_path / "model.morph"
        code, _, _ = run(
            ["tokenize", "train", "--algo", "morfessor",
             "--in", str(tiny_files / "train.txt"), "--out", str(model)], capsys
        )
        assert code == 0
        segmented = tmp_path / "seg.txt"
        code, stdout, _ = run(
            ["tokenize", "apply", "--model", str(model),
             "--in", str(tiny_files / "valid.txt"), "--out", str(segmented)], capsys
        )
        assert code == 0
        assert json.loads(stdout)["tokens"] >= 1


class TestLmCommands:
    def test_train_score_prune_cycle(self, tiny_files, tmp_path, capsys):
        arpa = tmp_path / "m.arpa"
        code, stdout, _ = run(
            ["lm", "train", "--in", str(tiny_files / "train.txt"),
             "--order", "3", "--out", str(arpa)], capsys
        )
        assert code == 0
        info = json.loads(stdout)
        assert info["order"] == 3
        assert len(info["ngrams"]) == 3

        code, stdout, _ = run(
            ["lm", "score", "--model", str(arpa),
             "--test", str(tiny_files / "valid.txt"), "--per-word"], capsys
        )
        assert code == 0
        assert json.loads(stdout)["perplexity"] > 1.0

        pruned = tmp_path / "p.arpa"
        budget = info["footprint_bytes"] // 2
        code, stdout, _ = run(
            ["lm", "prune", "--model", str(arpa), "--budget-bytes", str(budget),
             "--out", str(pruned)], capsys
        )
        assert code == 0
        assert json.loads(stdout)["footprint_bytes"] <= budget

    def test_missing_file_exit_3(self, tmp_path, capsys):
        code, _, err = run(
            ["lm", "train", "--in", str(tmp_path / "absent.txt"), "--out",
             str(tmp_path / "x.arpa")], capsys
        )
        assert code == 3

    def test_malformed_model_exit_3(self, tiny_files, tmp_path, capsys):
        bad = tmp_path / "bad.arpa"
        bad.write_text("\\data\\\nngram 1=7\n\n\\1-grams:\n-1\ta\n\n\\end\\\n")
        code, _, err = run(
            ["lm", "score", "--model", str(bad), "--test", str(tiny_files / "valid.txt")],
            capsys,
        )
        assert code == 3


class TestGenerateMixEval:
    def test_full_stage_chain(self, tiny_files, tmp_path, capsys):
        base = tmp_path / "base.arpa"
        extra = tmp_path / "extra.arpa"
        run(["lm", "train", "--in", str(tiny_files / "train.txt"), "--order", "2",
             "--out", str(base)], capsys)
        run(["lm", "train", "--in", str(tiny_files / "more.txt"), "--order", "2",
             "--out", str(extra)], capsys)

        generated = tmp_path / "gen.txt"
        code, stdout, _ = run(
            ["generate", "--model", str(extra), "--source", str(tiny_files / "train.txt"),
             "--target-tokens", "400", "--seed", "3", "--out", str(generated)], capsys
        )
        assert code == 0
        assert json.loads(stdout)["tokens"] >= 400

        # Mixing needs a shared vocabulary, so mix models over the same corpus.
        half = tmp_path / "trgen.arpa"
        run(["lm", "train", "--in", str(generated), "--order", "2", "--out", str(half)],
            capsys)
        mixed = tmp_path / "mixed.arpa"
        code, stdout, _ = run(
            ["mix", "--components", str(base), str(base), "--weights", "0.6,0.4",
             "--out", str(mixed)], capsys
        )
        assert code == 0

        report = tmp_path / "report.json"
        code, stdout, _ = run(
            ["eval", "--model", str(mixed), "--test", str(tiny_files / "eval.txt"),
             "--train-vocab-from", "x"] if False else
            ["eval", "--model", str(mixed), "--test", str(tiny_files / "eval.txt"),
             "--model-id", "mixed", "--out", str(report)], capsys
        )
        assert code == 0
        payload = json.loads(stdout)
        assert "perplexity_per_word" in payload
        assert "oov_rate" in payload
        assert payload["wer"] is None

    def test_generation_manifest_allows_bit_exact_rerun(self, tiny_files, tmp_path, capsys):
        model = tmp_path / "m.arpa"
        run(["lm", "train", "--in", str(tiny_files / "train.txt"), "--order", "2",
             "--out", str(model)], capsys)
        out1 = tmp_path / "gen1.txt"
        code, _, _ = run(
            ["generate", "--model", str(model), "--source", str(tiny_files / "train.txt"),
             "--target-tokens", "300", "--seed", "12", "--out", str(out1)], capsys
        )
        assert code == 0
        manifest = json.loads((tmp_path / "gen1.txt.manifest.json").read_text())
        assert manifest["output"][str(out1)] == sha256(out1)

        # Re-execute the recorded argv with a fresh output location.
        argv = manifest["argv"]
        out2 = tmp_path / "gen2.txt"
        argv = [a if a != str(out1) else str(out2) for a in argv]
        code, _, _ = run(argv, capsys)
        assert code == 0
        assert sha256(out2) == sha256(out1)

    def test_mix_requires_tuning_or_weights(self, tiny_files, tmp_path, capsys):
        model = tmp_path / "m.arpa"
        run(["lm", "train", "--in", str(tiny_files / "train.txt"), "--order", "2",
             "--out", str(model)], capsys)
        code, _, err = run(
            ["mix", "--components", str(model), str(model), "--out",
             str(tmp_path / "x.arpa")], capsys
        )
        assert code == 2


class TestExperiment:
    def test_grid_run_and_cache(self, tiny_files, tmp_path, capsys):
        plan = {
            "datasets": {
                "train": str(tiny_files / "train.txt"),
                "valid": str(tiny_files / "valid.txt"),
                "eval": str(tiny_files / "eval.txt"),
            },
            "runs": [
                {
                    "id": "word-base",
                    "mode": "word",
                    "order": 2,
                    "generator": {"source": "heldout-ngram",
                                  "corpus": str(tiny_files / "more.txt"), "order": 2},
                    "generation": {"target_token_count": 400, "seed": 5},
                },
                {
                    "id": "subword-bpe",
                    "mode": "subword-bpe",
                    "order": 2,
                    "bpe_inventory": 120,
                    "generator": {"source": "heldout-ngram",
                                  "corpus": str(tiny_files / "more.txt"), "order": 2},
                    "generation": {"target_token_count": 400, "seed": 5},
                },
            ],
        }
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(json.dumps(plan), encoding="utf-8")
        out_dir = tmp_path / "grid"
        code, stdout, _ = run(
            ["experiment", "--plan", str(plan_path), "--out-dir", str(out_dir)], capsys
        )
        assert code == 0
        rows = json.loads((out_dir / "comparison.json").read_text())
        assert [r["model_id"] for r in rows] == ["word-base", "subword-bpe"]
        assert all(not r.get("failed") for r in rows)
        assert (out_dir / "comparison.txt").exists()
        assert (out_dir / "word-base" / "mixed.arpa").exists()

        # Cached rerun is a no-op on unchanged plans.
        code, stdout, _ = run(
            ["experiment", "--plan", str(plan_path), "--out-dir", str(out_dir),
             "--cache"], capsys
        )
        assert code == 0
        rows = json.loads((out_dir / "comparison.json").read_text())
        assert all(r["cached"] for r in rows)

    def test_empty_plan_exit_2(self, tmp_path, capsys):
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(json.dumps({"datasets": {}, "runs": []}), encoding="utf-8")
        code, _, err = run(
            ["experiment", "--plan", str(plan_path), "--out-dir", str(tmp_path / "g")],
            capsys,
        )
        assert code == 2

    def test_partial_failure_marks_cell(self, tiny_files, tmp_path, capsys):
        plan = {
            "datasets": {
                "train": str(tiny_files / "train.txt"),
                "valid": str(tiny_files / "valid.txt"),
                "eval": str(tiny_files / "eval.txt"),
            },
            "runs": [
                {"id": "broken", "mode": "word", "order": 2,
                 "generator": {"source": "file", "path": str(tmp_path / "missing.txt")},
                 "generation": {"target_token_count": 10, "seed": 1}},
                {"id": "fine", "mode": "word", "order": 2,
                 "generator": {"source": "heldout-ngram",
                               "corpus": str(tiny_files / "more.txt"), "order": 2},
                 "generation": {"target_token_count": 200, "seed": 1}},
            ],
        }
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(json.dumps(plan), encoding="utf-8")
        code, stdout, err = run(
            ["experiment", "--plan", str(plan_path), "--out-dir", str(tmp_path / "g")],
            capsys,
        )
        assert code == 0
        rows = json.loads((tmp_path / "g" / "comparison.json").read_text())
        assert rows[0]["failed"]
        assert not rows[1].get("failed")
