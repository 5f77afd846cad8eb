import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from recsynth import RecsynthError, emit, run_pipeline, stats, validate
from recsynth.cli import main
from recsynth.copula import OrdinalFeatureSpec
from recsynth.pipeline import THREADS_ENV, default_workers


def _digests(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


@pytest.fixture(scope="module")
def small_dir(small_bundle, tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    emit(small_bundle, out)
    return out


class TestRunPipeline:
    def test_deterministic(self, small_spec, tmp_path):
        emit(run_pipeline(small_spec, workers=1), tmp_path / "a")
        emit(run_pipeline(small_spec, workers=3), tmp_path / "b")
        assert _digests(tmp_path / "a") == _digests(tmp_path / "b")

    def test_seed_matters(self, small_spec, small_bundle):
        other = run_pipeline(small_spec.replace(seed=small_spec.seed + 1), workers=1)
        assert not np.array_equal(other.latents, small_bundle.latents)

    def test_single_user(self, default_spec, tmp_path):
        bundle = run_pipeline(default_spec.replace(n_users=1), workers=1)
        emit(bundle, tmp_path)
        assert bundle.preferences.shape == (1, 10)
        assert len(bundle.ratings) == 3
        report = validate(tmp_path, default_spec.replace(n_users=1))
        # frequency checks carry no signal at n=1; structure must still hold
        assert report.get("d:preferences").passed and report.get("e:ratings").passed

    def test_row_counts(self, small_bundle):
        n = small_bundle.n_users
        assert small_bundle.latents.shape == (n, 4)
        assert small_bundle.affinity.shape == (n, 23)
        assert small_bundle.noise_cells.size == int(np.floor(0.01 * n * 23 + 0.5))
        assert all(len(v) == n for v in small_bundle.users.nominal.values())

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert default_workers() == 3
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(RecsynthError, match=THREADS_ENV):
            default_workers()


class TestEmit:
    def test_files(self, small_dir):
        names = {p.name for p in small_dir.iterdir()}
        assert {"users.csv", "items.csv", "preferences.csv", "ratings.csv", "beta.csv"} <= names
        assert "affinity.csv" not in names

    def test_users_header(self, small_dir):
        header = small_dir.joinpath("users.csv").read_text().splitlines()[0]
        assert header == "UserID,Age,AcDeg,Budget,Accom,Gender,Job,Region,GroupComp,bias,spread"

    def test_ratings_format(self, small_dir, small_bundle):
        lines = small_dir.joinpath("ratings.csv").read_text().splitlines()
        assert lines[0] == "userId,itemId,rating"
        assert len(lines) == len(small_bundle.ratings) + 1
        assert all(len(l.rsplit(",", 1)[1].split(".")[1]) == 2 for l in lines[1:50])

    def test_items(self, small_dir):
        with small_dir.joinpath("items.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["itemID", "name", "categories"]
        assert rows[3] == ["2", "Random Shopping Mall", "Shop|Relax"]

    def test_beta_echo(self, small_dir, small_bundle):
        beta = pd.read_csv(small_dir / "beta.csv", index_col=0)
        assert list(beta.columns) == list(small_bundle.beta.columns)
        np.testing.assert_array_equal(beta.to_numpy(), small_bundle.beta.values)

    def test_preferences_round_trip(self, small_dir, small_bundle):
        prefs = pd.read_csv(small_dir / "preferences.csv", float_precision="round_trip")
        np.testing.assert_array_equal(prefs.iloc[:, 1:].to_numpy(), small_bundle.preferences)

    def test_optional_outputs(self, small_spec, tmp_path):
        bundle = run_pipeline(small_spec.replace(n_users=50, emit_numeric=True), workers=1)
        emit(bundle, tmp_path, emit_affinity=True)
        aff = pd.read_csv(tmp_path / "affinity.csv")
        assert aff.shape == (50, 24)
        users = pd.read_csv(tmp_path / "users.csv")
        assert users.columns[-1] == "Age_value"
        assert users["Age_value"].between(18, 80).all()

    def test_unwritable(self, small_bundle, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(RecsynthError, match="file"):
            emit(small_bundle, blocker)


class TestStats:
    def test_report(self, small_dir, small_bundle):
        rep = stats(small_dir)
        assert rep.n_users == 2000 and rep.n_items == 23
        assert rep.density == pytest.approx(len(small_bundle.ratings) / (2000 * 23))
        assert 1 < rep.minimum and rep.maximum < 5
        assert sum(rep.histogram) == rep.n_ratings and len(rep.histogram) == 20
        assert set(rep.category_frequencies) == {"Age", "AcDeg", "Budget", "Accom", "Gender", "Job", "Region", "GroupComp"}
        assert sum(rep.category_frequencies["Job"].values()) == pytest.approx(1.0)
        assert np.allclose(np.diag(rep.latent_correlation), 1.0)
        assert "histogram" in rep.format()

    def test_empty_ratings(self, small_dir, tmp_path):
        for p in small_dir.iterdir():
            tmp_path.joinpath(p.name).write_bytes(p.read_bytes())
        tmp_path.joinpath("ratings.csv").write_text("userId,itemId,rating\n")
        rep = stats(tmp_path)
        assert rep.n_ratings == 0 and rep.density == 0.0 and rep.mean is None
        assert rep.histogram == [0] * 20
        rep.format()

    def test_missing_file(self, tmp_path):
        with pytest.raises(RecsynthError, match="users.csv"):
            stats(tmp_path)


class TestValidate:
    def test_passes(self, small_dir, small_spec):
        report = validate(small_dir, small_spec)
        assert report.passed, report.format()
        names = [c.name for c in report.checks]
        assert names[0] == "a:correlation" and names[-1] == "e:ratings"

    def test_tampered_cutoff(self, small_spec, tmp_path):
        features = list(small_spec.ordinal_features)
        age = features[0]
        features[0] = OrdinalFeatureSpec(age.name, age.labels, (-0.6, -0.5, 0.4, 0.9), age.value_ranges)
        emit(run_pipeline(small_spec.replace(ordinal_features=tuple(features)), workers=1), tmp_path)
        report = validate(tmp_path, small_spec)
        assert [c.name for c in report.failed()] == ["b:ordinal:Age"]

    def test_shuffled_preferences(self, small_dir, small_spec, tmp_path):
        for p in small_dir.iterdir():
            tmp_path.joinpath(p.name).write_bytes(p.read_bytes())
        prefs = pd.read_csv(tmp_path / "preferences.csv", float_precision="round_trip")
        values = prefs.iloc[:, 1:].to_numpy()
        prefs.iloc[:, 1:] = values[np.random.default_rng(0).permutation(len(values))]
        prefs.to_csv(tmp_path / "preferences.csv", index=False, float_format="%.17g")
        report = validate(tmp_path, small_spec)
        assert report.passed, report.format()

    def test_dangling_ids(self, small_dir, small_spec, tmp_path):
        for p in small_dir.iterdir():
            tmp_path.joinpath(p.name).write_bytes(p.read_bytes())
        with tmp_path.joinpath("ratings.csv").open("a") as fh:
            fh.write("99999,0,3.00\n")
        report = validate(tmp_path, small_spec)
        assert [c.name for c in report.failed()] == ["e:ratings"]


class TestCli:
    def test_generate_stats_validate(self, tmp_path, capsys):
        out = tmp_path / "b"
        assert main(["generate", "--n-users", "500", "--seed", "3", "--out", str(out)]) == 0
        assert (out / "ratings.csv").exists()
        assert main(["stats", "--in", str(out), "--json"]) == 0
        text = capsys.readouterr().out
        payload = json.loads(text[text.index("{"):])
        assert payload["n_users"] == 500
        assert main(["validate", "--in", str(out)]) == 0

    def test_validate_failure_exit(self, tmp_path):
        out = tmp_path / "b"
        main(["generate", "--n-users", "300", "--out", str(out)])
        with (out / "ratings.csv").open("a") as fh:
            fh.write("0,0,5.00\n")
        assert main(["validate", "--in", str(out)]) == 1

    def test_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("seed = 1\n")
        assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "ordinal" in capsys.readouterr().err
        assert main(["stats", "--in", str(tmp_path / "nowhere")]) == 2

    def test_default_config(self, capsys):
        assert main(["default-config"]) == 0
        assert "[preferences.beta]" in capsys.readouterr().out

    def test_module_entry(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "recsynth", "generate", "--n-users", "20", "--out", str(tmp_path)],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0, proc.stderr
        assert "20 users" in proc.stdout
