import json
from pathlib import Path

import pytest

from cveminer import gateway
from cveminer.assets import fixture_bytes
from cveminer.cli import main as cli_main
from cveminer.errors import (EmptyHardwareSet, MissingDescriptions,
                             OutputDirLocked)
from cveminer.pipeline import PipelineConfig, run_pipeline, run_validate


def write_config(tmp_path, **overrides):
    corpus_path = tmp_path / "mini.jsonl"
    if not corpus_path.exists():
        corpus_path.write_bytes(fixture_bytes("mini_corpus.jsonl"))
    doc = {
        "seed": 7,
        "corpus": {"paths": [str(corpus_path)], "format": "canonical-jsonl",
                   "years": [2021, 2024]},
        "providers": {
            "chat": {"kind": "mock-chat", "model_id": "mock-hwsw", "max_parallel": 4},
            "embed": {"kind": "mock-embed", "model_id": "mock-embed-64", "max_parallel": 4},
        },
        "clustering": {"k": None, "elbow_range": [2, 10], "restarts": 8},
        "projection": {"perplexity": 30, "iterations": 500},
        "output_dir": str(tmp_path / "out"),
        "cache_path": str(tmp_path / "cache" / "responses.jsonl"),
    }
    for key, value in overrides.items():
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return doc


def tree_bytes(outdir: Path, skip=("manifest.json",)):
    out = {}
    for path in sorted(outdir.rglob("*")):
        if path.is_file() and path.name not in skip:
            out[str(path.relative_to(outdir))] = path.read_bytes()
    return out


def stripped_manifest(outdir: Path):
    doc = json.loads((outdir / "manifest.json").read_text())
    doc.pop("created_at", None)
    for stage in doc["stages"]:
        stage.pop("started_at", None)
        stage.pop("duration_s", None)
        stage.pop("status", None)
    return doc


def test_pipeline_counts_and_artifacts(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    manifest = run_pipeline(config)
    by_name = {s["name"]: s for s in manifest["stages"]}
    assert by_name["ingest"]["counts"] == {"ingested": 60, "rejected": 0}
    assert by_name["classify"]["counts"]["hardware"] == 24
    assert by_name["embed"]["counts"] == {"rows": 24, "dim": 64}
    assert by_name["cluster"]["counts"]["k"] == by_name["topics"]["counts"]["profiles"]
    outdir = tmp_path / "out"
    for name in ("records.jsonl", "predictions.jsonl", "hardware.jsonl",
                 "embeddings.jsonl", "elbow.json", "cluster_model.json",
                 "assignments.jsonl", "ngram_profiles.json", "topic_summaries.json",
                 "representatives.json", "coords.jsonl", "topic_table.md",
                 "representatives.md", "scatter.svg", "review_queue.json",
                 "yearly_counts.csv", "manifest.json"):
        assert (outdir / name).exists(), name
    assert not (outdir / ".lock").exists()


def test_pipeline_deterministic_across_runs(tmp_path):
    doc_a = write_config(tmp_path, output_dir=str(tmp_path / "out_a"),
                         cache_path=str(tmp_path / "cache_a.jsonl"))
    doc_b = write_config(tmp_path, output_dir=str(tmp_path / "out_b"),
                         cache_path=str(tmp_path / "cache_b.jsonl"))
    run_pipeline(PipelineConfig.from_dict(doc_a))
    run_pipeline(PipelineConfig.from_dict(doc_b))
    assert tree_bytes(tmp_path / "out_a") == tree_bytes(tmp_path / "out_b")
    assert stripped_manifest(tmp_path / "out_a") == stripped_manifest(tmp_path / "out_b")


def test_pipeline_resume_recomputes_later_stages_only(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    run_pipeline(config)
    (tmp_path / "out" / "embeddings.jsonl").unlink()
    manifest = run_pipeline(config)
    status = {s["name"]: s["status"] for s in manifest["stages"]}
    assert status["ingest"] == "cached"
    assert status["classify"] == "cached"
    assert status["embed"] == "computed"
    assert status["cluster"] == "computed"
    assert status["report"] == "computed"


def test_pipeline_fully_cached_second_run(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    run_pipeline(config)
    manifest = run_pipeline(config)
    assert all(s["status"] == "cached" for s in manifest["stages"])


def test_pipeline_param_change_invalidates_downstream(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    run_pipeline(config)
    changed = PipelineConfig.from_dict(write_config(tmp_path, **{"report.m": 3}))
    manifest = run_pipeline(changed)
    status = {s["name"]: s["status"] for s in manifest["stages"]}
    assert status["ingest"] == "cached"
    assert status["topics"] == "cached"
    assert status["representatives"] == "computed"


def test_pipeline_empty_hardware_set(tmp_path):
    corpus_path = tmp_path / "sw_only.jsonl"
    lines = [json.dumps({"id": f"CVE-2021-{5000+i}",
                         "description": "plain web application flaw", "source": "t"})
             for i in range(6)]
    corpus_path.write_text("\n".join(lines) + "\n")
    doc = write_config(tmp_path)
    doc["corpus"]["paths"] = [str(corpus_path)]
    with pytest.raises(EmptyHardwareSet):
        run_pipeline(PipelineConfig.from_dict(doc))
    # completed stages are still recorded in the manifest
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert [s["name"] for s in manifest["stages"]] == ["ingest"]


def test_pipeline_until_stage(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    manifest = run_pipeline(config, until="embed")
    assert [s["name"] for s in manifest["stages"]] == ["ingest", "classify", "embed"]
    assert not (tmp_path / "out" / "cluster_model.json").exists()


def test_pipeline_dry_run_contacts_no_provider(tmp_path, monkeypatch):
    def explode(*args, **kwargs):
        raise AssertionError("provider must not be called in a dry run")

    monkeypatch.setattr(gateway, "mock_chat_reply", explode)
    monkeypatch.setattr(gateway, "mock_embed_vector", explode)
    monkeypatch.setattr(gateway.requests, "post", explode)

    doc = write_config(tmp_path, dry_run=True)
    manifest = run_pipeline(PipelineConfig.from_dict(doc))
    assert manifest["planned"]["classify_calls"] == 60
    assert manifest["planned"]["embed_calls_upper_bound"] == 60
    assert manifest["planned"]["classify_prompt_chars"] > 0
    assert manifest["stages"] == []
    assert not (tmp_path / "out" / "records.jsonl").exists()


def test_pipeline_ingests_nvd_feed_format(tmp_path):
    feed = {"vulnerabilities": [
        {"cve": {"id": f"CVE-2022-{6000+i}",
                 "descriptions": [{"lang": "en",
                                   "value": "firmware flash region writable" if i % 2 == 0
                                   else "web form input flaw"}]}}
        for i in range(8)]}
    feed_path = tmp_path / "feed.json"
    feed_path.write_text(json.dumps(feed))
    doc = write_config(tmp_path)
    doc["corpus"] = {"paths": [str(feed_path)], "format": "nvd-feed"}
    manifest = run_pipeline(PipelineConfig.from_dict(doc), until="classify")
    counts = {s["name"]: s["counts"] for s in manifest["stages"]}
    assert counts["ingest"]["ingested"] == 8
    assert counts["classify"]["hardware"] == 4


def test_pipeline_output_dir_locked(tmp_path):
    doc = write_config(tmp_path)
    outdir = tmp_path / "out"
    outdir.mkdir()
    (outdir / ".lock").write_text("12345")
    with pytest.raises(OutputDirLocked):
        run_pipeline(PipelineConfig.from_dict(doc))


def _bench_paths(tmp_path):
    corpus_path = tmp_path / "bench.jsonl"
    corpus_path.write_bytes(fixture_bytes("mock_labeled_corpus.jsonl"))
    hw = tmp_path / "hw.json"
    hw.write_bytes(fixture_bytes("mock_labeled_hardware.json"))
    sw = tmp_path / "sw.json"
    sw.write_bytes(fixture_bytes("mock_labeled_software.json"))
    return corpus_path, hw, sw


def test_validate_benchmark_accuracy(tmp_path):
    corpus_path, hw, sw = _bench_paths(tmp_path)
    doc = write_config(tmp_path)
    doc["corpus"]["paths"] = [str(corpus_path)]
    report = run_validate(PipelineConfig.from_dict(doc), [str(hw), str(sw)])
    assert (report.tp, report.tn, report.fp, report.fn) == (100, 99, 1, 0)
    assert report.accuracy == 0.995
    outdir = tmp_path / "out"
    assert (outdir / "validation_summary.md").exists()
    assert "0.995" in (outdir / "validation_summary.csv").read_text()


def test_validate_perfect_subset(tmp_path):
    corpus_path, hw, _ = _bench_paths(tmp_path)
    doc = write_config(tmp_path)
    doc["corpus"]["paths"] = [str(corpus_path)]
    report = run_validate(PipelineConfig.from_dict(doc), [str(hw)])
    assert report.accuracy == 1.0 and report.n == 100


def test_validate_missing_descriptions(tmp_path):
    corpus_path, hw, _ = _bench_paths(tmp_path)
    fixture = {"name": "missing", "label": 1,
               "ids": [f"CVE-2020-{9000+i}" for i in range(10)]}
    missing_path = tmp_path / "missing.json"
    missing_path.write_text(json.dumps(fixture))
    doc = write_config(tmp_path)
    doc["corpus"]["paths"] = [str(corpus_path)]
    with pytest.raises(MissingDescriptions) as err:
        run_validate(PipelineConfig.from_dict(doc), [str(missing_path)])
    assert len(err.value.ids) == 10


def test_validate_requires_labeled_fixture(tmp_path):
    corpus_path, _, _ = _bench_paths(tmp_path)
    unlabeled = tmp_path / "unlabeled.json"
    unlabeled.write_text(json.dumps({"name": "x", "label": None, "ids": []}))
    doc = write_config(tmp_path)
    doc["corpus"]["paths"] = [str(corpus_path)]
    with pytest.raises(ValueError):
        run_validate(PipelineConfig.from_dict(doc), [str(unlabeled)])


# --- command-line interface ---------------------------------------------------

def _config_file(tmp_path, **overrides):
    doc = write_config(tmp_path, **overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc, indent=2))
    return path


def test_cli_pipeline_success(tmp_path, capsys):
    code = cli_main(["pipeline", "--config", str(_config_file(tmp_path))])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("classify: computed") for line in lines)
    assert (tmp_path / "out" / "scatter.svg").exists()


def test_cli_stage_subcommand(tmp_path):
    code = cli_main(["classify", "--config", str(_config_file(tmp_path))])
    assert code == 0
    assert (tmp_path / "out" / "predictions.jsonl").exists()
    assert not (tmp_path / "out" / "embeddings.jsonl").exists()


def test_cli_dotted_override(tmp_path):
    config = _config_file(tmp_path)
    code = cli_main(["cluster", "--config", str(config), "--clustering.k=3",
                     "--out", str(tmp_path / "out_k3")])
    assert code == 0
    model = json.loads((tmp_path / "out_k3" / "cluster_model.json").read_text())
    assert model["k"] == 3
    assert not (tmp_path / "out_k3" / "elbow.json").exists()


def test_cli_template_flag(tmp_path):
    alt = tmp_path / "alt_prompt.txt"
    alt.write_text("Answer 1 for hardware, 0 for software.\n")
    config = _config_file(tmp_path)
    assert cli_main(["classify", "--config", str(config), "--template", str(alt)]) == 0
    # alternate instructions still route through the DESC payload convention
    predictions = (tmp_path / "out" / "predictions.jsonl").read_text().splitlines()
    assert len(predictions) == 60


def test_report_ids_exist_in_source_corpus(tmp_path):
    config = PipelineConfig.from_dict(write_config(tmp_path))
    run_pipeline(config)
    outdir = tmp_path / "out"
    corpus_ids = {json.loads(line)["id"]
                  for line in (tmp_path / "mini.jsonl").read_text().splitlines()}
    import re
    pattern = re.compile(r"CVE-\d{4}-\d{4,7}")
    for name in ("topic_table.md", "representatives.md", "scatter.svg",
                 "review_queue.json", "coords.jsonl", "representatives.json"):
        found = set(pattern.findall((outdir / name).read_text()))
        assert found <= corpus_ids, f"{name} references unknown ids: {found - corpus_ids}"


def test_cli_seed_override_changes_manifest(tmp_path):
    config = _config_file(tmp_path)
    assert cli_main(["ingest", "--config", str(config), "--seed", "99"]) == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["seed"] == 99


def test_cli_dry_run(tmp_path, capsys):
    code = cli_main(["pipeline", "--config", str(_config_file(tmp_path)), "--dry-run"])
    assert code == 0
    assert "classify_calls" in capsys.readouterr().out


def test_cli_validate(tmp_path, capsys):
    corpus_path, hw, sw = _bench_paths(tmp_path)
    config = _config_file(tmp_path, **{"corpus.paths": [str(corpus_path)]})
    code = cli_main(["validate", "--config", str(config),
                     "--fixture", str(hw), "--fixture", str(sw)])
    assert code == 0
    assert "accuracy 0.995" in capsys.readouterr().out


def test_cli_exit_code_config_error(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert cli_main(["pipeline", "--config", str(missing)]) == 2


def test_cli_exit_code_data_error(tmp_path):
    config = _config_file(tmp_path, **{"corpus.paths": [str(tmp_path / "absent.jsonl")]})
    assert cli_main(["pipeline", "--config", str(config)]) == 2


def test_cli_exit_code_enumerated_failures(tmp_path):
    corpus_path, hw, _ = _bench_paths(tmp_path)
    config = _config_file(tmp_path, **{
        "corpus.paths": [str(corpus_path)],
        "providers.chat.model_id": "mock-fail-hwsw",
        "providers.chat.retry_limit": 0,
    })
    # per-record failures are enumerated and surface as a data error
    code = cli_main(["validate", "--config", str(config), "--fixture", str(hw)])
    assert code == 2


def test_cli_provider_exit_code_on_hard_failure(tmp_path, monkeypatch):
    from cveminer.errors import ProviderError

    def boom(*args, **kwargs):
        raise ProviderError(503, "down")

    monkeypatch.setattr("cveminer.pipeline.run_pipeline", boom)
    monkeypatch.setattr("cveminer.cli.run_pipeline", boom)
    config = _config_file(tmp_path)
    assert cli_main(["pipeline", "--config", str(config)]) == 3
