"""Zero-shot hardware/software classification with the mock chat provider.

Shows the prompt layout, lenient label parsing, corpus classification with
its failure queue, and the accuracy benchmark on the bundled 200-record
labeled corpus (where the keyword-rule mock scores exactly 199/200).
"""

from pathlib import Path

from cveminer import classifier, corpus
from cveminer.assets import fixture_bytes
from cveminer.gateway import ProviderConfig
from cveminer.reporting import validation_summary

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

template = classifier.load_template("hwsw")
records, _ = corpus.parse_records(fixture_bytes("mini_corpus.jsonl"))

# The prompt is the fixed instruction block plus the record serialized on a
# single DESC: line, so embedded quotes and newlines cannot break it.
prompt = classifier.build_hwsw_prompt(template, records[0])
print("prompt tail:")
for line in prompt.splitlines()[-3:]:
    print("  ", line[:100])

# Model outputs are parsed leniently; anything without a clear 0/1 is
# routed to review rather than guessed.
for raw in ("1", " 0\n", "Result: 1"):
    print(f"parse_label({raw!r}) -> {classifier.parse_label(raw)}")

chat = ProviderConfig(kind="mock-chat", model_id="mock-hwsw", max_parallel=4)
predictions, failures = classifier.classify_corpus(chat, template, records)
hardware = classifier.hardware_subset(records, predictions)
print(f"\nmini corpus: {len(predictions)} predictions, {len(failures)} failures, "
      f"{len(hardware)} hardware")

# Accuracy benchmark: join the labeled fixtures against the benchmark
# corpus, classify, and score with hardware as the positive class.
bench, _ = corpus.parse_records(fixture_bytes("mock_labeled_corpus.jsonl"))
by_id = {r.id: r for r in bench}
labeled = []
for name in ("mock_labeled_hardware.json", "mock_labeled_software.json"):
    fixture = corpus.load_fixture(fixture_bytes(name))
    labeled += [corpus.LabeledCve(by_id[i], fixture.expected_label) for i in fixture.ids]

bench_predictions, _ = classifier.classify_corpus(chat, template, [lc.record for lc in labeled])
report = classifier.evaluate(bench_predictions, labeled)
print(f"benchmark: accuracy {report.accuracy} "
      f"(tp={report.tp} tn={report.tn} fp={report.fp} fn={report.fn})")

md, csv = validation_summary(report, [(chat.model_id, report)])
(OUT / "validation_summary.md").write_text(md)
(OUT / "validation_summary.csv").write_text(csv)
print("wrote", OUT / "validation_summary.md")
