#!/usr/bin/env python3
"""Re-import an exported MPS model with HiGHS and report counts and optimum.

Usage: crosscheck_mps.py MODEL.mps [--time-limit S] [--gap G]

Prints one JSON object: {"rows", "cols", "integers", "status", "objective",
"bound"}. Exits 3 if highspy is not installed.
"""
import argparse
import json
import sys

try:
    import highspy
except ImportError:
    print("highspy not available", file=sys.stderr)
    sys.exit(3)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("--time-limit", type=float, default=300.0)
    ap.add_argument("--gap", type=float, default=1e-4)
    ap.add_argument("--no-solve", action="store_true")
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.gap)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print("failed to read model", file=sys.stderr)
        sys.exit(4)
    lp = h.getLp()
    integers = sum(1 for t in lp.integrality_ if t == highspy.HighsVarType.kInteger)
    out = {"rows": lp.num_row_, "cols": lp.num_col_, "integers": integers}
    if not args.no_solve:
        h.run()
        info = h.getInfo()
        out["status"] = h.modelStatusToString(h.getModelStatus())
        out["objective"] = info.objective_function_value
        out["bound"] = info.mip_dual_bound
    print(json.dumps(out))


if __name__ == "__main__":
    main()
