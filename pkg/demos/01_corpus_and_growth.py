"""Corpus handling: parsing, reject auditing, year filters, growth counts.

Walks the bundled 60-record mini corpus through the ingestion layer, shows
how malformed entries are reported instead of dropped, and writes the
yearly-growth CSV.
"""

from pathlib import Path

from cveminer import corpus
from cveminer.assets import fixture_bytes
from cveminer.reporting import growth_csv

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# Parse the bundled corpus: one JSON object per line (id, description, source).
records, rejects = corpus.parse_records(fixture_bytes("mini_corpus.jsonl"))
print(f"parsed {len(records)} records, {len(rejects)} rejects")
print("first record:", records[0].id, "->", records[0].description[:60], "...")

# Malformed entries never vanish silently; each reject keeps its reason.
noisy = b"\n".join([
    b'{"id":"CVE-2024-1234","description":"a real one"}',
    b'{"id":"CVE-24-1","description":"bad id"}',
    b'not even json',
])
ok, bad = corpus.parse_records(noisy)
print(f"\nnoisy input: {len(ok)} accepted, {len(bad)} rejected")
for reject in bad:
    print(f"  entry {reject.index}: {reject.reason}")

# Year filtering is inclusive on both ends and derived from the CVE id.
recent = corpus.filter_by_years(records, 2023, 2024)
print(f"\n2023-2024 subset: {len(recent)} records")

# Per-year growth counts back the trend chart; the CSV is one of the
# pipeline's standing artifacts.
counts = corpus.yearly_counts(records)
print("yearly counts:", dict(sorted(counts.items())))
(OUT / "yearly_counts.csv").write_text(growth_csv(counts))
print("wrote", OUT / "yearly_counts.csv")

# Id-list fixtures carry identifiers only; descriptions are joined from an
# ingested corpus at validation time.
hw = corpus.load_fixture(fixture_bytes("validation_hardware.json"))
sw = corpus.load_fixture(fixture_bytes("validation_software.json"))
mihw = corpus.load_fixture(fixture_bytes("mihw_2025.json"))
print(f"\nbundled fixtures: {len(hw.ids)} hardware + {len(sw.ids)} software "
      f"validation ids, {len(mihw.ids)} MIHW ids")
