"""Shared argument handling for the experiment scripts."""

import argparse
import json
from pathlib import Path

from pap_planner.scenario import Scenario


def parse(description: str):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--scenario", help="YAML scenario file; defaults are used when omitted")
    p.add_argument("--out", default="results", help="output directory")
    args = p.parse_args()
    sc = Scenario.load(args.scenario) if args.scenario else Scenario()
    return sc, Path(args.out)


def finish(result, out: Path) -> None:
    csv_path, json_path = result.write(out)
    print(json.dumps(result.summary, indent=2, default=float))
    print(f"wrote {csv_path} and {json_path}")
