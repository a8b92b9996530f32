import json
from datetime import date

import pytest

from econarrative.cli import build_parser, main

SUBCOMMANDS = [
    "ingest", "features", "train", "predict", "evaluate",
    "baseline", "synth", "analyze", "llm-analyze", "experiment",
]


def _write_walk_csv(path, n=60):
    lines = ["date,value"]
    d = date(2021, 1, 4)
    value = 100.0
    for i in range(n):
        while d.weekday() >= 5:
            d = d.fromordinal(d.toordinal() + 1)
        value *= 1.001 if i % 3 else 0.998
        lines.append(f"{d.isoformat()},{value:.4f}")
        d = d.fromordinal(d.toordinal() + 1)
    path.write_text("\n".join(lines) + "\n")
    return path


class TestParser:
    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

    @pytest.mark.parametrize("cmd", SUBCOMMANDS)
    def test_every_subcommand_has_help(self, cmd):
        assert main([cmd, "--help"]) == 0

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_is_usage_error(self):
        assert main(["synth", "--kind", "walk", "--out", "x", "--bogus"]) == 1

    def test_all_subcommands_registered(self):
        parser = build_parser()
        actions = [a for a in parser._subparsers._group_actions][0]
        assert sorted(actions.choices) == sorted(SUBCOMMANDS)


class TestSynth:
    def test_walk_deterministic_across_runs(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        args = ["synth", "--kind", "walk", "--n", "50", "--seed", "7"]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert (out_a / "series.csv").read_bytes() == (out_b / "series.csv").read_bytes()

    def test_narratives_deterministic(self, tmp_path):
        series = _write_walk_csv(tmp_path / "series.csv")
        args = ["synth", "--kind", "narratives", "--p", "1.0", "--seed", "7",
                "--series", str(series)]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "tweets.jsonl").read_bytes() == (
            tmp_path / "b" / "tweets.jsonl"
        ).read_bytes()

    def test_narratives_requires_series(self, tmp_path):
        assert main(["synth", "--kind", "narratives", "--out", str(tmp_path)]) == 1


class TestPipelineCommands:
    def test_ingest_writes_summary(self, tmp_path, write_jsonl):
        tweets = write_jsonl(
            [{"id": "1", "date": "2021-01-04", "text": "markets up", "followers": 5000}]
        )
        out = tmp_path / "out"
        assert main(["ingest", "--tweets", str(tweets), "--out", str(out)]) == 0
        summary = json.loads((out / "ingest.json").read_text())
        assert summary["tweets"]["records"] == 1
        assert (out / "run.log").exists()

    def test_ingest_without_inputs_is_usage_error(self, tmp_path):
        assert main(["ingest", "--out", str(tmp_path / "o")]) == 1

    def test_missing_file_is_runtime_error(self, tmp_path):
        code = main(["ingest", "--tweets", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_features_train_predict_evaluate_chain(self, tmp_path):
        series = _write_walk_csv(tmp_path / "series.csv")
        feat_dir = tmp_path / "features"
        assert main(["features", "--series", str(series), "--kind", "none",
                     "--financial", "direction-window", "--out", str(feat_dir)]) == 0
        features = feat_dir / "features.csv"
        assert features.exists()

        model_dir = tmp_path / "model"
        assert main(["train", "--features", str(features), "--model", "logistic",
                     "--lam", "0.1", "--out", str(model_dir)]) == 0

        pred_dir = tmp_path / "preds"
        assert main(["predict", "--model", str(model_dir / "model.json"),
                     "--features", str(features), "--out", str(pred_dir)]) == 0

        # join predictions with labels for evaluation
        import csv

        rows = list(csv.DictReader((pred_dir / "predictions.csv").open()))
        labels = list(csv.DictReader(features.open()))
        joined = tmp_path / "joined.csv"
        with joined.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "prediction", "label"])
            for r, l in zip(rows, labels):
                writer.writerow([r["date"], r["prediction"], l["label"]])
        assert main(["evaluate", "--predictions", str(joined),
                     "--task", "direction-change"]) == 0

    def test_features_with_embedding_kind(self, tmp_path, write_jsonl):
        tweets = write_jsonl(
            [
                {"id": str(i), "date": f"2021-01-{4 + i % 20:02d}",
                 "text": f"talk about topic {i}", "followers": 1500}
                for i in range(30)
            ]
        )
        series = _write_walk_csv(tmp_path / "series.csv", n=25)
        out = tmp_path / "emb"
        assert main(["features", "--tweets", str(tweets), "--series", str(series),
                     "--kind", "embedding", "--out", str(out)]) == 0
        header = (out / "features.csv").read_text().splitlines()[0]
        # 16 embedding columns (default dimension) + 7 value-window columns
        assert header.count("x") == 23

    def test_baseline_command(self, tmp_path, capsys):
        series = _write_walk_csv(tmp_path / "series.csv")
        out = tmp_path / "out"
        assert main(["baseline", "--kind", "up", "--series", str(series),
                     "--out", str(out)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["name"] == "up"
        assert 0.0 <= payload["accuracy"] <= 1.0

    def test_analyze_freq(self, tmp_path, write_jsonl):
        tweets = write_jsonl(
            [
                {"id": "1", "date": "2021-01-04", "text": "debt talks stall", "followers": 100},
                {"id": "2", "date": "2021-02-04", "text": "debt debt debt", "followers": 100},
            ]
        )
        out = tmp_path / "o"
        assert main(["analyze", "freq", "--tweets", str(tweets), "--term", "debt",
                     "--by", "month", "--out", str(out)]) == 0
        body = (out / "freq_debt.csv").read_text().splitlines()
        assert body[0] == "period,count"
        assert body[1:] == ["2021-01,1", "2021-02,3"]

    def test_analyze_sent_hist(self, tmp_path, write_jsonl):
        tweets = write_jsonl(
            [{"id": "1", "date": "2021-01-04", "text": "great win", "followers": 100}]
        )
        out = tmp_path / "o"
        assert main(["analyze", "sent-hist", "--tweets", str(tweets), "--bin", "0.5",
                     "--out", str(out)]) == 0
        body = (out / "sentiment_histogram.csv").read_text().splitlines()
        assert body[0] == "bin_low,bin_high,count"
        assert sum(int(line.rsplit(",", 1)[1]) for line in body[1:]) == 1


class TestExperimentCommand:
    def _config(self, tmp_path, seed=7):
        config = {
            "seed": seed,
            "data": {
                "series": {"random_walk": {"n": 120, "sigma": 0.01, "v0": 100.0, "seed": 3}},
                "text": {"synthetic_narratives": {"seed": 5, "p": 1.0, "per_day": 2}},
            },
            "task": {"kind": "direction-change", "horizon": 1},
            "features": {"text": "sentiment-window", "financial": "direction-window", "window": 7},
            "models": [
                {"name": "tf", "type": "logistic", "inputs": "TF", "lam": 0.01},
                {"name": "up", "type": "baseline", "kind": "up"},
            ],
            "eval": {"train_fraction": 0.8},
        }
        path = tmp_path / f"exp_{seed}.json"
        path.write_text(json.dumps(config))
        return path

    def test_single_config(self, tmp_path):
        config = self._config(tmp_path)
        out = tmp_path / "out"
        assert main(["experiment", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "report.json").exists()
        assert (out / "manifest.json").exists()
        assert (out / "run.log").exists()

    def test_parallel_configs(self, tmp_path):
        a = self._config(tmp_path, seed=1)
        b = self._config(tmp_path, seed=2)
        out = tmp_path / "out"
        assert main(["experiment", "--config", str(a), "--config", str(b),
                     "--jobs", "2", "--out", str(out)]) == 0
        assert (out / "exp_1" / "report.json").exists()
        assert (out / "exp_2" / "report.json").exists()

    def test_missing_config_is_runtime_error(self, tmp_path):
        code = main(["experiment", "--config", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 2


class TestLlmAnalyzeCommand:
    def test_against_stub(self, tmp_path, write_jsonl, stub_server):
        stub_server.state.set_chat_content(
            "<Analysis of Tweets>worry about rates</Analysis of Tweets>\n"
            "<Potential Effects on VIX>may rise</Potential Effects on VIX>"
        )
        tweets = write_jsonl(
            [{"id": "1", "date": "2021-01-04", "text": "rates will rise", "followers": 5000}]
        )
        series = _write_walk_csv(tmp_path / "series.csv", n=10)
        out = tmp_path / "out"
        code = main([
            "llm-analyze", "--tweets", str(tweets), "--series", str(series),
            "--target", "VIX", "--endpoint", stub_server.url,
            "--cache-dir", str(tmp_path / "cache"), "--out", str(out),
        ])
        assert code == 0
        payload = json.loads((out / "analysis.json").read_text())
        assert payload["tweet_analysis"] == "worry about rates"
        assert stub_server.calls == 1
