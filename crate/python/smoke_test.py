#!/usr/bin/env python3
"""Smoke test for the intermodal_py extension module.

Builds nothing itself: run `cargo build -p intermodal-py` first, then
`python3 python/smoke_test.py`. Loads the cdylib straight out of target/,
drives a miniature instance through every exported operation, and checks
the two solve paths against each other.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / "libintermodal_py.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("build the bindings first: cargo build -p intermodal-py")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="intermodal_py_"))
    shutil.copy2(newest, stage / "intermodal_py.so")
    sys.path.insert(0, str(stage))
    import intermodal_py

    return intermodal_py


def main():
    im = load_module()

    inst_json = im.generate_instance(dcs=1, satellites=1, orders=3, seed=5)
    assert im.validate_instance(inst_json) == []

    # Trim the service horizon so the micro solves in seconds.
    inst = json.loads(inst_json)
    inst["services"] = [s for s in inst["services"] if s["departure"] < 96]
    inst_json = json.dumps(inst)
    assert im.validate_instance(inst_json) == []
    print(f"instance: {len(inst['orders'])} orders, {len(inst['services'])} services")

    milp = json.loads(im.solve_milp(inst_json))
    assert milp["status"] == "optimal", milp["status"]
    lbbd = json.loads(im.run_lbbd(inst_json, gap_target=0.0))
    assert lbbd["status"] == "converged", lbbd["status"]
    assert abs(lbbd["upper"] - milp["objective"]) < 1e-4, (lbbd["upper"], milp["objective"])
    print(f"milp and lbbd agree at {milp['objective']:.4f}")

    evaluation = json.loads(im.verify_plan(inst_json, json.dumps(lbbd["plan"])))
    assert evaluation["violations"] == [], evaluation["violations"]
    assert abs(evaluation["total"] - lbbd["upper"]) < 1e-6
    print("plan verifies clean")

    # Reprice every delivery route independently; the engine's sequences are
    # optimal per order set, so the totals must match the evaluator's split.
    plan = lbbd["plan"]
    repriced = 0.0
    for service_id, sequence in plan["routes"].items():
        solution = json.loads(
            im.solve_route(inst_json, service_id, sequence, penalty="linear")
        )
        repriced += solution["objective"]
    split = evaluation["lastmile_cost"] + evaluation["penalty_cost"]
    assert abs(repriced - split) < 1e-6, (repriced, split)
    print(f"{len(plan['routes'])} delivery routes repriced to {repriced:.4f}")

    extended_json = im.extend_instance(inst_json, layout="all_connected")
    ext = json.loads(im.run_extended_lbbd(extended_json, gap_target=0.0))
    assert ext["status"] == "converged", ext["status"]
    assert ext["upper"] >= lbbd["upper"] - 1e-6, (ext["upper"], lbbd["upper"])
    print(f"three-stage optimum {ext['upper']:.4f}")

    assert abs(im.compute_gap(7121.0, 10032.0) - 29.02) < 0.01
    assert im.compute_gap(100.0, 100.0) == 0.0
    print("smoke test passed")


if __name__ == "__main__":
    main()
