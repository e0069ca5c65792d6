"""End-to-end pipeline: ingest, classify, embed, cluster, topics, project, report.

Every run writes a manifest (``manifest.json``) listing the stages, the
digests of their inputs, the artifacts they produced, and per-stage counts.
On a re-run, a stage whose inputs and existing outputs match the previous
manifest is skipped; the first stage that must recompute forces all later
stages to recompute as well, so stale downstream artifacts can never
survive an upstream change.

An output directory is guarded by a lock file; two runs may not share one.
The response cache lives at its own configured path (outside the artifact
tree), so re-runs never re-bill completed provider calls.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import classifier, clustering, corpus, gateway, projection, reporting, topics, vectors
from .assets import blocklist as default_blocklist
from .assets import load_termfile_path
from .assets import stopwords as default_stopwords
from .errors import CveMinerError, EmptyHardwareSet, MissingDescriptions, OutputDirLocked


@dataclass
class PipelineConfig:
    """Every knob of a run; serialized into the manifest for reproducibility."""

    corpus_paths: list[str]
    output_dir: str
    cache_path: str
    corpus_format: str = "canonical-jsonl"
    years: tuple[int, int] | None = None
    seed: int = 0
    chat_provider: gateway.ProviderConfig = field(
        default_factory=lambda: gateway.ProviderConfig(kind="mock-chat", model_id="mock-hwsw"))
    embed_provider: gateway.ProviderConfig = field(
        default_factory=lambda: gateway.ProviderConfig(kind="mock-embed", model_id="mock-embed-64"))
    template_path: str | None = None
    k: int | None = None
    elbow_range: tuple[int, int] = (2, 10)
    restarts: int = 8
    max_iter: int = 300
    tol: float = 1e-6
    normalize: bool = True
    metric: str = "cosine"
    r: int = 15
    m: int = 10
    per_document: bool = False
    stopwords_path: str | None = None
    blocklist_path: str | None = None
    perplexity: float = 30.0
    tsne_iterations: int = 1000
    learning_rate: float = 200.0
    dry_run: bool = False

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.corpus_paths:
            raise ValueError("at least one corpus path is required")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        corpus_doc = doc.get("corpus", {})
        providers = doc.get("providers", {})
        clustering_doc = doc.get("clustering", {})
        topics_doc = doc.get("topics", {})
        projection_doc = doc.get("projection", {})
        report_doc = doc.get("report", {})
        years = corpus_doc.get("years")
        elbow = clustering_doc.get("elbow_range", [2, 10])
        return cls(
            corpus_paths=list(corpus_doc.get("paths", [])),
            corpus_format=corpus_doc.get("format", "canonical-jsonl"),
            years=tuple(years) if years else None,
            seed=int(doc.get("seed", 0)),
            chat_provider=gateway.ProviderConfig(**providers.get(
                "chat", {"kind": "mock-chat", "model_id": "mock-hwsw"})),
            embed_provider=gateway.ProviderConfig(**providers.get(
                "embed", {"kind": "mock-embed", "model_id": "mock-embed-64"})),
            template_path=doc.get("classifier", {}).get("template_path"),
            k=clustering_doc.get("k"),
            elbow_range=(int(elbow[0]), int(elbow[1])),
            restarts=int(clustering_doc.get("restarts", 8)),
            max_iter=int(clustering_doc.get("max_iter", 300)),
            tol=float(clustering_doc.get("tol", 1e-6)),
            normalize=bool(clustering_doc.get("normalize", True)),
            metric=clustering_doc.get("metric", "cosine"),
            r=int(topics_doc.get("r", 15)),
            m=int(report_doc.get("m", 10)),
            per_document=bool(topics_doc.get("per_document", False)),
            stopwords_path=topics_doc.get("stopwords_path"),
            blocklist_path=topics_doc.get("blocklist_path"),
            perplexity=float(projection_doc.get("perplexity", 30.0)),
            tsne_iterations=int(projection_doc.get("iterations", 1000)),
            learning_rate=float(projection_doc.get("learning_rate", 200.0)),
            output_dir=doc["output_dir"],
            cache_path=doc["cache_path"],
            dry_run=bool(doc.get("dry_run", False)),
        )

    def identity(self) -> dict:
        """Config view that determines results (paths that are pure
        environment, like output_dir and cache_path, are excluded)."""
        doc = asdict(self)
        doc.pop("output_dir")
        doc.pop("cache_path")
        doc.pop("dry_run")
        doc.pop("corpus_paths")
        return doc


STAGES = ("ingest", "classify", "embed", "cluster", "topics",
          "representatives", "project", "report")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _digest_file(path: Path) -> str:
    return _sha256(path.read_bytes())


def _digest_params(params: dict) -> str:
    return _sha256(json.dumps(params, sort_keys=True, default=str).encode("utf-8"))


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class _Lock:
    def __init__(self, outdir: Path):
        self.path = outdir / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputDirLocked(f"{self.path} exists; another run owns this directory")
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


class _StageRunner:
    """Executes stages in order, skipping ones whose inputs are unchanged."""

    def __init__(self, outdir: Path, previous: dict | None):
        self.outdir = outdir
        self.previous = {s["name"]: s for s in (previous or {}).get("stages", [])}
        self.records: list[dict] = []
        self.dirty = False

    def _outputs_fresh(self, prev: dict) -> bool:
        for rel, digest in prev.get("outputs", {}).items():
            path = self.outdir / rel
            if not path.exists() or _digest_file(path) != digest:
                return False
        return True

    def run(self, name: str, params: dict, input_files: list[Path], fn) -> dict:
        """fn() must write this stage's artifacts and return its counts."""
        input_digest = _digest_params({
            "params": params,
            "files": [_digest_file(p) for p in input_files],
        })
        prev = self.previous.get(name)
        if (not self.dirty and prev is not None
                and prev.get("input_digest") == input_digest
                and self._outputs_fresh(prev)):
            record = dict(prev)
            record["status"] = "cached"
            self.records.append(record)
            return record["counts"]

        self.dirty = True
        started = _utcnow()
        t0 = time.perf_counter()
        counts, outputs = fn()
        record = {
            "name": name,
            "status": "computed",
            "input_digest": input_digest,
            "outputs": {str(p.relative_to(self.outdir)): _digest_file(p) for p in outputs},
            "counts": counts,
            "started_at": started,
            "duration_s": round(time.perf_counter() - t0, 6),
        }
        self.records.append(record)
        return counts


def _write(path: Path, data: bytes) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path


def _load_terms(path: str | None, bundled) -> frozenset[str]:
    return load_termfile_path(path) if path else bundled()


def _effective_perplexity(configured: float, n: int) -> float:
    # strict upper bound is (n - 1) / 3; clamp so small runs still project
    return min(configured, (n - 1) / 3.0 - 1e-9)


def _manifest_doc(config: PipelineConfig, runner: _StageRunner | None,
                  planned: dict | None = None) -> dict:
    doc = {
        "run_id": _digest_params(config.identity())[:16],
        "seed": config.seed,
        "config": config.identity(),
        "created_at": _utcnow(),
        "stages": runner.records if runner else [],
    }
    if planned is not None:
        doc["planned"] = planned
    return doc


def _write_manifest(outdir: Path, doc: dict) -> None:
    _write(outdir / "manifest.json",
           (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _ingest_records(config: PipelineConfig) -> tuple[list[corpus.CveRecord], list[corpus.RejectEntry]]:
    records: list[corpus.CveRecord] = []
    rejects: list[corpus.RejectEntry] = []
    for path in config.corpus_paths:
        recs, rej = corpus.parse_records(Path(path).read_bytes(), config.corpus_format)
        records.extend(recs)
        rejects.extend(rej)
    if config.years is not None:
        records = corpus.filter_by_years(records, config.years[0], config.years[1])
    return records, rejects


def run_pipeline(config: PipelineConfig, until: str | None = None) -> dict:
    """Run stages in order up to `until` (default: all) and return the manifest.

    Stage errors halt the run; the manifest written so far records the
    completed stages.
    """
    if until is not None and until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    outdir = Path(config.output_dir)
    last = STAGES.index(until) if until else len(STAGES) - 1

    if config.dry_run:
        records, rejects = _ingest_records(config)
        template = classifier.load_template("hwsw", config.template_path)
        planned = {
            "classify_calls": len(records),
            "classify_prompt_chars": sum(
                len(classifier.build_hwsw_prompt(template, r)) for r in records),
            "embed_calls_upper_bound": len(records),
            "embed_chars_upper_bound": sum(len(r.description) for r in records),
            "summarize_calls": config.k if config.k is not None else "chosen by elbow",
            "note": "no provider was contacted; counts bound the billable calls",
        }
        outdir.mkdir(parents=True, exist_ok=True)
        doc = _manifest_doc(config, None, planned=planned)
        _write_manifest(outdir, doc)
        return doc

    with _Lock(outdir):
        previous = None
        manifest_path = outdir / "manifest.json"
        if manifest_path.exists():
            previous = json.loads(manifest_path.read_text(encoding="utf-8"))
        runner = _StageRunner(outdir, previous)
        cache = gateway.ResponseCache(config.cache_path)
        terms_stop = _load_terms(config.stopwords_path, default_stopwords)
        terms_block = _load_terms(config.blocklist_path, default_blocklist)
        hwsw_template = classifier.load_template("hwsw", config.template_path)
        sum_template = classifier.load_template("summarize")

        try:
            # -- ingest ------------------------------------------------------
            def do_ingest():
                records, rejects = _ingest_records(config)
                outs = [
                    _write(outdir / "records.jsonl", corpus.dump_records(records)),
                    _write(outdir / "rejects.jsonl", ("\n".join(
                        json.dumps({"index": r.index, "reason": r.reason, "raw": r.raw})
                        for r in rejects) + ("\n" if rejects else "")).encode("utf-8")),
                    _write(outdir / "yearly_counts.csv",
                           reporting.growth_csv(corpus.yearly_counts(records)).encode("utf-8")),
                ]
                return {"ingested": len(records), "rejected": len(rejects)}, outs

            runner.run(
                "ingest",
                {"format": config.corpus_format, "years": config.years},
                [Path(p) for p in config.corpus_paths], do_ingest)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("ingest") == last:
                return _finish(outdir, config, runner)

            # -- classify ----------------------------------------------------
            def do_classify():
                records, _ = corpus.parse_records((outdir / "records.jsonl").read_bytes())
                predictions, failures = classifier.classify_corpus(
                    config.chat_provider, hwsw_template, records, cache=cache)
                hardware = classifier.hardware_subset(records, predictions)
                outs = [
                    _write(outdir / "predictions.jsonl", classifier.dump_predictions(predictions)),
                    _write(outdir / "classify_failures.jsonl", ("\n".join(
                        json.dumps({"id": i, "reason": why}) for i, why in failures)
                        + ("\n" if failures else "")).encode("utf-8")),
                    _write(outdir / "hardware.jsonl", corpus.dump_records(hardware)),
                ]
                if not hardware:
                    raise EmptyHardwareSet("no record was classified as hardware")
                return {"predicted": len(predictions), "failures": len(failures),
                        "hardware": len(hardware)}, outs

            runner.run(
                "classify",
                {"provider": [config.chat_provider.kind, config.chat_provider.model_id,
                              config.chat_provider.temperature],
                 "template": _sha256(hwsw_template.system_text.encode("utf-8"))},
                [outdir / "records.jsonl"], do_classify)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("classify") == last:
                return _finish(outdir, config, runner)

            # -- embed -------------------------------------------------------
            def do_embed():
                hardware, _ = corpus.parse_records((outdir / "hardware.jsonl").read_bytes())
                matrix = vectors.embed_corpus(config.embed_provider, hardware, cache=cache)
                outs = [_write(outdir / "embeddings.jsonl", vectors.dump_matrix(matrix))]
                return {"rows": len(matrix), "dim": matrix.dim}, outs

            runner.run(
                "embed",
                {"provider": [config.embed_provider.kind, config.embed_provider.model_id]},
                [outdir / "hardware.jsonl"], do_embed)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("embed") == last:
                return _finish(outdir, config, runner)

            def load_matrix() -> vectors.EmbeddingMatrix:
                matrix = vectors.load_matrix((outdir / "embeddings.jsonl").read_bytes())
                return vectors.normalize_matrix(matrix) if config.normalize else matrix

            # -- cluster -----------------------------------------------------
            def do_cluster():
                matrix = load_matrix()
                n = len(matrix)
                outs = []
                if config.k is not None:
                    chosen_k = config.k
                else:
                    k_min, k_max = config.elbow_range
                    k_max = min(k_max, n - 1)
                    curve = clustering.elbow_select(matrix, k_min, k_max, config.seed,
                                                    config.restarts, config.max_iter, config.tol)
                    chosen_k = curve.chosen_k
                    outs.append(_write(outdir / "elbow.json", (json.dumps(
                        {"k_values": curve.k_values, "wcss_values": curve.wcss_values,
                         "chosen_k": curve.chosen_k}, sort_keys=True) + "\n").encode("utf-8")))
                model = clustering.fit_best_of(matrix, chosen_k, config.seed,
                                               config.restarts, config.max_iter, config.tol)
                outs.append(_write(outdir / "cluster_model.json", clustering.dump_model(model)))
                outs.append(_write(outdir / "assignments.jsonl",
                                   clustering.dump_assignments(matrix.ids, model.assignments)))
                return {"k": model.k, "wcss": model.wcss,
                        "iterations": model.iterations}, outs

            cluster_counts = runner.run(
                "cluster",
                {"k": config.k, "elbow_range": list(config.elbow_range),
                 "restarts": config.restarts, "max_iter": config.max_iter,
                 "tol": config.tol, "normalize": config.normalize, "seed": config.seed},
                [outdir / "embeddings.jsonl"], do_cluster)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("cluster") == last:
                return _finish(outdir, config, runner)

            k_star = int(cluster_counts["k"])

            # -- topics ------------------------------------------------------
            def do_topics():
                hardware, _ = corpus.parse_records((outdir / "hardware.jsonl").read_bytes())
                assignments = clustering.load_assignments((outdir / "assignments.jsonl").read_bytes())
                texts = [r.description for r in hardware]
                labels = [assignments[r.id] for r in hardware]
                profiles = topics.cluster_keywords(texts, labels, k_star, config.r,
                                                   terms_block, terms_stop,
                                                   per_document=config.per_document)
                summaries, blocked = [], []
                for profile in profiles:
                    if not profile.entries:
                        summaries.append({"cluster": profile.cluster, "label": None,
                                          "keywords": [], "model": None})
                        continue
                    try:
                        summary = topics.summarize_cluster(
                            config.chat_provider, sum_template, profile,
                            cache=cache, blocked=terms_block)
                        summaries.append({"cluster": summary.cluster, "label": summary.label,
                                          "keywords": list(summary.keywords_used),
                                          "model": summary.model_id})
                    except topics.BlockedTermInLabel as exc:
                        blocked.append({"cluster": profile.cluster, "label": exc.label,
                                        "term": exc.term})
                        summaries.append({"cluster": profile.cluster, "label": None,
                                          "keywords": profile.keywords, "model": None})
                outs = [
                    _write(outdir / "ngram_profiles.json", topics.dump_profiles(profiles)),
                    _write(outdir / "topic_summaries.json", (json.dumps(
                        summaries, indent=2, sort_keys=True) + "\n").encode("utf-8")),
                    _write(outdir / "blocked_labels.json", (json.dumps(
                        blocked, indent=2, sort_keys=True) + "\n").encode("utf-8")),
                ]
                return {"profiles": len(profiles), "blocked": len(blocked)}, outs

            runner.run(
                "topics",
                {"r": config.r, "k": k_star, "per_document": config.per_document,
                 "stopwords": sorted(terms_stop), "blocklist": sorted(terms_block),
                 "provider": [config.chat_provider.kind, config.chat_provider.model_id]},
                [outdir / "hardware.jsonl", outdir / "assignments.jsonl"], do_topics)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("topics") == last:
                return _finish(outdir, config, runner)

            # -- representatives ---------------------------------------------
            def do_representatives():
                matrix = load_matrix()
                model = _load_model(outdir, matrix)
                reps = clustering.representatives(matrix, model, config.m, config.metric)
                outs = [_write(outdir / "representatives.json", (json.dumps(
                    {str(c): ids for c, ids in sorted(reps.items())},
                    indent=2, sort_keys=True) + "\n").encode("utf-8"))]
                return {"clusters": len(reps), "m": config.m}, outs

            runner.run(
                "representatives",
                {"m": config.m, "metric": config.metric, "normalize": config.normalize},
                [outdir / "embeddings.jsonl", outdir / "cluster_model.json",
                 outdir / "assignments.jsonl"], do_representatives)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("representatives") == last:
                return _finish(outdir, config, runner)

            # -- project -----------------------------------------------------
            def do_project():
                matrix = load_matrix()
                n = len(matrix)
                if n < 5:
                    outs = [_write(outdir / "coords.jsonl", b"")]
                    return {"skipped": f"{n} rows < 5"}, outs
                eff = _effective_perplexity(config.perplexity, n)
                params = projection.TsneParams(perplexity=eff,
                                               iterations=config.tsne_iterations,
                                               learning_rate=config.learning_rate)
                result = projection.tsne(matrix, params, seed=config.seed)
                assignments = clustering.load_assignments((outdir / "assignments.jsonl").read_bytes())
                outs = [_write(outdir / "coords.jsonl", projection.dump_coords(result, assignments))]
                return {"points": n, "perplexity": eff, "final_kl": result.final_kl}, outs

            runner.run(
                "project",
                {"perplexity": config.perplexity, "iterations": config.tsne_iterations,
                 "learning_rate": config.learning_rate, "seed": config.seed,
                 "normalize": config.normalize},
                [outdir / "embeddings.jsonl", outdir / "assignments.jsonl"], do_project)
            _write_manifest(outdir, _manifest_doc(config, runner))
            if STAGES.index("project") == last:
                return _finish(outdir, config, runner)

            # -- report ------------------------------------------------------
            def do_report():
                profiles = topics.load_profiles((outdir / "ngram_profiles.json").read_bytes())
                summaries_doc = json.loads((outdir / "topic_summaries.json").read_text(encoding="utf-8"))
                summaries = [topics.TopicSummary(cluster=s["cluster"],
                                                 label=s["label"] or "(needs review)",
                                                 keywords_used=tuple(s["keywords"]),
                                                 model_id=s["model"] or "")
                             for s in summaries_doc]
                reps_doc = json.loads((outdir / "representatives.json").read_text(encoding="utf-8"))
                reps = {int(c): ids for c, ids in reps_doc.items()}
                blocked_doc = json.loads((outdir / "blocked_labels.json").read_text(encoding="utf-8"))
                failures = []
                for line in (outdir / "classify_failures.jsonl").read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        obj = json.loads(line)
                        failures.append((obj["id"], obj["reason"]))

                outs = [
                    _write(outdir / "topic_table.md",
                           reporting.topic_table(profiles, summaries).encode("utf-8")),
                    _write(outdir / "representatives.md",
                           reporting.representatives_table(reps).encode("utf-8")),
                    _write(outdir / "review_queue.json", reporting.review_export(
                        failures,
                        [(b["cluster"], b["label"], b["term"]) for b in blocked_doc]).encode("utf-8")),
                ]
                for profile in profiles:
                    if not profile.entries:
                        continue
                    outs.append(_write(outdir / f"term_weights_{profile.cluster}.json",
                                       reporting.term_weights(profile).encode("utf-8")))
                    outs.append(_write(outdir / f"wordcloud_{profile.cluster}.svg",
                                       reporting.wordcloud_grid_svg(profile)))
                coords_data = (outdir / "coords.jsonl").read_bytes()
                if coords_data.strip():
                    ids, xy, cluster_by_id = [], [], {}
                    for line in coords_data.decode("utf-8").splitlines():
                        obj = json.loads(line)
                        ids.append(obj["id"])
                        xy.append((obj["x"], obj["y"]))
                        cluster_by_id[obj["id"]] = obj["cluster"]
                    proj = projection.ProjectionResult(
                        ids=ids, coords=np.array(xy), seed=config.seed,
                        params=projection.TsneParams(), final_kl=0.0)
                    legend = {s.cluster: s.label for s in summaries}
                    outs.append(_write(outdir / "scatter.svg",
                                       reporting.scatter_svg(proj, cluster_by_id, legend)))
                return {"artifacts": len(outs)}, outs

            runner.run(
                "report",
                {"m": config.m},
                [outdir / "ngram_profiles.json", outdir / "topic_summaries.json",
                 outdir / "representatives.json", outdir / "coords.jsonl",
                 outdir / "classify_failures.jsonl"], do_report)
            return _finish(outdir, config, runner)
        finally:
            _write_manifest(outdir, _manifest_doc(config, runner))


def _finish(outdir: Path, config: PipelineConfig, runner: _StageRunner) -> dict:
    doc = _manifest_doc(config, runner)
    _write_manifest(outdir, doc)
    return doc


def _load_model(outdir: Path, matrix: vectors.EmbeddingMatrix) -> clustering.ClusterModel:
    doc = json.loads((outdir / "cluster_model.json").read_text(encoding="utf-8"))
    assignments_map = clustering.load_assignments((outdir / "assignments.jsonl").read_bytes())
    assignments = np.array([assignments_map[i] for i in matrix.ids], dtype=np.int64)
    return clustering.ClusterModel(
        k=int(doc["k"]), centroids=np.array(doc["centroids"], dtype=np.float64),
        assignments=assignments, wcss=float(doc["wcss"]), seed=doc["seed"],
        iterations=int(doc["iterations"]), converged=bool(doc["converged"]))


def run_validate(config: PipelineConfig, fixture_paths: list[str]) -> classifier.ValidationReport:
    """Classify exactly the fixture records and score against their labels.

    Fixture ids are joined against the ingested corpus by id (no year
    filtering); unresolvable ids raise MissingDescriptions listing them.
    Emits the per-model summary table, its CSV mirror, and the predictions.
    """
    outdir = Path(config.output_dir)
    records: list[corpus.CveRecord] = []
    for path in config.corpus_paths:
        recs, _ = corpus.parse_records(Path(path).read_bytes(), config.corpus_format)
        records.extend(recs)
    by_id = {r.id: r for r in records}

    labeled: list[corpus.LabeledCve] = []
    missing: list[str] = []
    for path in fixture_paths:
        fixture = corpus.load_fixture(Path(path).read_bytes())
        if fixture.expected_label is None:
            raise ValueError(f"fixture {fixture.name!r} carries no label; cannot validate")
        for cve_id in fixture.ids:
            record = by_id.get(cve_id)
            if record is None:
                missing.append(cve_id)
            else:
                labeled.append(corpus.LabeledCve(record=record, label=fixture.expected_label))
    if missing:
        raise MissingDescriptions(missing)

    cache = gateway.ResponseCache(config.cache_path)
    template = classifier.load_template("hwsw", config.template_path)
    predictions, failures = classifier.classify_corpus(
        config.chat_provider, template, [lc.record for lc in labeled], cache=cache)
    if failures:
        raise CveMinerError(f"{len(failures)} records failed classification: {failures[:3]}")
    report = classifier.evaluate(predictions, labeled)

    md, csv = reporting.validation_summary(report, [(config.chat_provider.model_id, report)])
    outdir.mkdir(parents=True, exist_ok=True)
    _write(outdir / "validation_summary.md", md.encode("utf-8"))
    _write(outdir / "validation_summary.csv", csv.encode("utf-8"))
    _write(outdir / "validation_predictions.jsonl", classifier.dump_predictions(predictions))
    return report
