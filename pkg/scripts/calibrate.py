#!/usr/bin/env python3
"""Regenerate the frozen calibration fixture for the synthetic objective.

Runs the ten-million-draw brute-force oracle at the chosen critical value and
writes the truth (plus its binomial standard error) to
tests/fixtures/calibration.json. The acceptance suite asserts against these
frozen numbers, so rerun this only when the objective itself changes.
"""
import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from adastrat.evaluators import SyntheticObjective, oracle_probability
from adastrat.rng import substream

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "calibration.json"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--critical-value", type=float, default=0.95)
    parser.add_argument("--noise-scale", type=float, default=0.025)
    parser.add_argument("--draws", type=int, default=10_000_000)
    parser.add_argument("--seed", type=int, default=20260808)
    args = parser.parse_args()

    objective = SyntheticObjective(kind="quadratic", noise_scale=args.noise_scale, seed=0)
    started = time.time()
    p, se = oracle_probability(
        objective, args.critical_value, args.draws, substream(args.seed, "calibration-oracle")
    )
    print(f"oracle truth {p:.7g} +- {se:.3g} ({args.draws} draws, {time.time() - started:.1f}s)")
    if not 1e-3 <= p <= 3e-3:
        print("warning: truth is outside the rare-event target band [1e-3, 3e-3]", file=sys.stderr)
    FIXTURE.write_text(
        json.dumps(
            {
                "evaluator": {
                    "type": "synthetic",
                    "kind": "quadratic",
                    "noise_scale": args.noise_scale,
                    "seed": 0,
                },
                "critical_value": args.critical_value,
                "oracle_truth": p,
                "oracle_standard_error": se,
                "oracle_draws": args.draws,
                "oracle_seed": args.seed,
                "oracle_stream": "calibration-oracle",
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print(f"wrote {FIXTURE}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
