"""The composite pipeline: one config, a manifest, resumable stages.

Runs everything over the bundled mini corpus with mock providers, shows the
per-stage manifest, then demonstrates both resume-after-delete and the
dry-run cost estimate.
"""

import json
import shutil
from pathlib import Path

from cveminer.assets import fixture_bytes
from cveminer.pipeline import PipelineConfig, run_pipeline

BASE = Path(__file__).parent / "output" / "pipeline"
shutil.rmtree(BASE, ignore_errors=True)
BASE.mkdir(parents=True)

corpus_path = BASE / "mini.jsonl"
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
    "projection": {"perplexity": 30, "iterations": 1000},
    "output_dir": str(BASE / "out"),
    "cache_path": str(BASE / "cache.jsonl"),
}

manifest = run_pipeline(PipelineConfig.from_dict(doc))
print("first run:")
for stage in manifest["stages"]:
    print(f"  {stage['name']:16s} {stage['status']:9s} {json.dumps(stage['counts'])}")

# Deleting one artifact invalidates that stage and everything after it;
# earlier stages are served from their recorded digests.
(BASE / "out" / "cluster_model.json").unlink()
manifest = run_pipeline(PipelineConfig.from_dict(doc))
print("\nafter deleting cluster_model.json:")
for stage in manifest["stages"]:
    print(f"  {stage['name']:16s} {stage['status']}")

# Dry runs parse the corpus locally and plan the provider calls without
# contacting anything; multiply by provider prices to budget a real run.
doc["dry_run"] = True
doc["output_dir"] = str(BASE / "out_dry")
planned = run_pipeline(PipelineConfig.from_dict(doc))["planned"]
print("\ndry-run plan:", json.dumps(planned, indent=2, sort_keys=True))
