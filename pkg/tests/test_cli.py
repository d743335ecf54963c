import csv
import json

import numpy as np
import pytest

from conftest import PY
from photorestore.cli import main
from photorestore.degrade import read_manifest
from photorestore.imaging import load_png, save_png, to_grayscale
from photorestore.pipeline import read_transcript, replay_transcript
from synth import make_scene, write_source_corpus


@pytest.fixture
def source_dir(tmp_path):
    d = tmp_path / "src"
    d.mkdir()
    write_source_corpus(d, 3, h=64, w=64)
    return d


@pytest.fixture
def gray_input(tmp_path):
    img = make_scene(seed=55, h=64, w=64, color=False)
    return save_png(img, tmp_path / "input.png"), img


class TestDegradeCommand:
    def test_builds_manifest(self, tmp_path, source_dir):
        out = tmp_path / "data"
        rc = main(["degrade", "--src", str(source_dir), "--out", str(out),
                   "--count", "3", "--seed", "9"])
        assert rc == 0
        assert len(read_manifest(out / "manifest.jsonl")) == 3

    def test_idempotent_under_seed(self, tmp_path, source_dir):
        out = tmp_path / "data"
        args = ["degrade", "--src", str(source_dir), "--out", str(out),
                "--count", "2", "--seed", "4"]
        assert main(args) == 0
        first = (out / "manifest.jsonl").read_bytes()
        assert main(args) == 0
        assert (out / "manifest.jsonl").read_bytes() == first

    def test_custom_recipe_file(self, tmp_path, source_dir):
        from photorestore.degrade import DegradationRecipe
        recipe = DegradationRecipe(crack_fill="black")
        p = tmp_path / "recipe.json"
        p.write_text(json.dumps(recipe.to_dict()))
        out = tmp_path / "data"
        rc = main(["degrade", "--src", str(source_dir), "--out", str(out),
                   "--count", "1", "--recipe", str(p)])
        assert rc == 0
        rec = read_manifest(out / "manifest.jsonl")[0]
        assert rec["draws"]["crack_fill"] == "black"

    def test_missing_source_dir_is_usage_error(self, tmp_path):
        rc = main(["degrade", "--src", str(tmp_path / "ghost"),
                   "--out", str(tmp_path / "o"), "--count", "1"])
        assert rc == 1


class TestRestoreCommand:
    def test_identity_preset_passthrough(self, tmp_path, gray_input):
        path, img = gray_input
        out = tmp_path / "restored.png"
        rc = main(["restore", "--input", str(path), "--out", str(out),
                   "--preset", "identity"])
        assert rc == 0
        restored = load_png(out)
        for c in range(3):
            assert np.array_equal(restored[..., c], img)

    def test_default_preset_with_mask_and_transcript(self, tmp_path, gray_input):
        path, img = gray_input
        mask = np.zeros((64, 64), dtype=np.uint8)
        mask[30:34, 4:60] = 255
        mask_path = save_png(mask, tmp_path / "mask.png")
        out = tmp_path / "restored.png"
        troot = tmp_path / "session"
        rc = main(["restore", "--input", str(path), "--mask", str(mask_path),
                   "--out", str(out), "--transcript", str(troot)])
        assert rc == 0
        restored = load_png(out)
        assert restored.shape == (128, 128, 3)  # default face stage upscales 2x
        # the persisted transcript replays to the same pixels
        assert np.array_equal(replay_transcript(troot), restored)
        records = read_transcript(troot)
        assert [r["stage"] for r in records] == ["damage", "denoise", "face", "colorize"]
        assert records[0]["backend_id"] == "damage.reference"

    def test_no_mask_skips_damage_backend(self, tmp_path, gray_input):
        path, _ = gray_input
        troot = tmp_path / "session"
        rc = main(["restore", "--input", str(path),
                   "--out", str(tmp_path / "r.png"), "--transcript", str(troot)])
        assert rc == 0
        assert read_transcript(troot)[0]["backend_id"] == "damage.skip"

    def test_set_overrides_apply(self, tmp_path, gray_input):
        path, img = gray_input
        out = tmp_path / "sepia.png"
        rc = main(["restore", "--input", str(path), "--out", str(out),
                   "--preset", "identity", "--set", "colorize.extras.mode=sepia"])
        assert rc == 0
        restored = load_png(out)
        bright = img > 40
        assert (restored[..., 0][bright] >= restored[..., 2][bright]).all()
        assert int(restored[..., 0].sum()) > int(restored[..., 2].sum())

    def test_seed_flag_lands_in_transcript(self, tmp_path, gray_input):
        path, _ = gray_input
        troot = tmp_path / "session"
        rc = main(["restore", "--input", str(path),
                   "--out", str(tmp_path / "r.png"), "--transcript", str(troot),
                   "--seed", "1234"])
        assert rc == 0
        assert all(r["seed"] == 1234 for r in read_transcript(troot))

    def test_missing_input_is_io_error(self, tmp_path):
        rc = main(["restore", "--input", str(tmp_path / "ghost.png"),
                   "--out", str(tmp_path / "r.png")])
        assert rc == 2

    def test_unknown_preset_is_usage_error(self, tmp_path, gray_input):
        path, _ = gray_input
        rc = main(["restore", "--input", str(path),
                   "--out", str(tmp_path / "r.png"), "--preset", "fancy"])
        assert rc == 1

    def test_bad_override_is_usage_error(self, tmp_path, gray_input):
        path, _ = gray_input
        rc = main(["restore", "--input", str(path),
                   "--out", str(tmp_path / "r.png"), "--set", "nonsense"])
        assert rc == 1

    def test_failing_external_backend_is_exit_3(self, tmp_path, gray_input, scripts):
        path, _ = gray_input
        decl = {"backends": [{
            "backend_id": "denoise.mock", "stage": "denoise",
            "command_template": f"{PY} {scripts / 'fail.py'} {{input}} {{output}}",
        }]}
        backends_file = tmp_path / "backends.json"
        backends_file.write_text(json.dumps(decl))
        rc = main(["restore", "--input", str(path),
                   "--out", str(tmp_path / "r.png"),
                   "--backends", str(backends_file),
                   "--set", "denoise.backend_id=denoise.mock"])
        assert rc == 3


class TestEvalCommand:
    def test_scores_manifest(self, tmp_path, source_dir):
        data = tmp_path / "data"
        assert main(["degrade", "--src", str(source_dir), "--out", str(data),
                     "--count", "3", "--seed", "5"]) == 0
        table = tmp_path / "table.csv"
        rc = main(["eval", "--manifest", str(data / "manifest.jsonl"),
                   "--out", str(table), "--pad", "2", "--jobs", "1"])
        assert rc == 0
        with open(table, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert rows[-1]["image_id"] == "AGGREGATE"

    def test_missing_manifest_is_usage_error(self, tmp_path):
        rc = main(["eval", "--manifest", str(tmp_path / "ghost.jsonl"),
                   "--out", str(tmp_path / "t.csv")])
        assert rc == 1


class TestBallotsCommand:
    def test_report_reproduces_support_levels(self, tmp_path, ballots_csv):
        out = tmp_path / "report.txt"
        rc = main(["ballots", "--in", str(ballots_csv), "--out", str(out)])
        assert rc == 0
        text = out.read_text()
        assert "C: 63.37%" in text
        assert "C: 64.82%" in text

    def test_missing_file_is_io_error(self, tmp_path):
        rc = main(["ballots", "--in", str(tmp_path / "ghost.csv"),
                   "--out", str(tmp_path / "r.txt")])
        assert rc == 2

    def test_invalid_ballots_are_io_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("participant,question_type,question_id,choice\n"
                       "p1,quality,q1,A\np1,quality,q1,B\n")
        rc = main(["ballots", "--in", str(bad), "--out", str(tmp_path / "r.txt")])
        assert rc == 2


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert main([]) == 1

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert main(["degrade", "--frobnicate"]) == 1

    def test_unknown_command_is_usage_error(self):
        assert main(["transmogrify"]) == 1

    def test_missing_required_flag_is_usage_error(self, tmp_path):
        assert main(["degrade", "--src", str(tmp_path)]) == 1
