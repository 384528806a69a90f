"""Generate a synthetic co-writing corpus: planted usage families, survey and session index.

Writes OUTPUT/logs/*.jsonl (CoAuthor event format), OUTPUT/survey.csv and
OUTPUT/session_index.csv, ready for ``cowriting-patterns all``.
"""

import argparse
from pathlib import Path

from src.synthetic import FAMILIES, scripted_builder, write_corpus

OUTPUT = "test_corpus"


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output", nargs="?", default=OUTPUT)
    parser.add_argument("--per-family", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scripted", action="store_true", help="Also write the eleven-minute scripted log")
    args = parser.parse_args()

    out = Path(args.output)
    corpus = write_corpus(out, n_per_family=args.per_family, seed=args.seed)
    if args.scripted:
        (out / "scripted.jsonl").write_text(scripted_builder().jsonl(), encoding="utf-8")
    print(f"Wrote {len(corpus.families)} sessions ({', '.join(FAMILIES)}) to {corpus.log_dir}")
    print(f"Run: cowriting-patterns all --data-dir {corpus.log_dir} --survey {corpus.survey_path} "
          f"--session-index {corpus.index_path} --output-dir {out / 'out'}")
