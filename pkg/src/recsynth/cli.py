"""Command-line entry point: ``recsynth generate | stats | validate | default-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from .config import default_config_text, load_config
from .errors import RecsynthError
from .pipeline import emit, run_pipeline
from .report import stats, validate


def _generate(args) -> int:
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.n_users is not None:
        changes["n_users"] = args.n_users
    if changes:
        spec = spec.replace(**changes)
    start = time.perf_counter()
    bundle = run_pipeline(spec)
    files = emit(bundle, args.out, emit_affinity=args.emit_affinity or None)
    r = bundle.ratings
    print(f"wrote {len(files)} files to {args.out} ({spec.n_users} users, {spec.n_items} items, "
          f"{len(r)} ratings, density {r.density:.4f}) in {time.perf_counter() - start:.1f}s")
    return 0


def _stats(args) -> int:
    report = stats(args.in_dir)
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.format())
    return 0


def _validate(args) -> int:
    report = validate(args.in_dir, load_config(args.config))
    print(report.format())
    return 0 if report.passed else 1


def _default_config(args) -> int:
    sys.stdout.write(default_config_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recsynth", description="Synthetic recommender-system dataset generator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset bundle")
    gen.add_argument("--config", default="default", help='TOML config path, or "default" for the shipped case study')
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-users", type=int)
    gen.add_argument("--out", default="out", help="output directory (default: ./out)")
    gen.add_argument("--emit-affinity", action="store_true", help="also write the users x items affinity matrix")
    gen.set_defaults(func=_generate)

    st = sub.add_parser("stats", help="summarize a generated bundle")
    st.add_argument("--in", dest="in_dir", required=True)
    st.add_argument("--json", action="store_true", help="print the report as JSON")
    st.set_defaults(func=_stats)

    val = sub.add_parser("validate", help="check a bundle against its config")
    val.add_argument("--in", dest="in_dir", required=True)
    val.add_argument("--config", default="default")
    val.set_defaults(func=_validate)

    dc = sub.add_parser("default-config", help="print the shipped default config")
    dc.set_defaults(func=_default_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RecsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
