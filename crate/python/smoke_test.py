#!/usr/bin/env python3
"""Smoke test for the rankprover_py extension module.

Build the module first:

    cargo build -p rankprover-py --release --features extension-module

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import shutil
import sys
import tempfile
import warnings
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

EX2 = """\
context
  dimension 3
  layers 1
endofcontext
layer 0
 points
A B C D
 hypotheses
C D  : 2
C A  : 2
A C D  : 2
A D B  : 3
  conclusion
A C B  : 3
endoflayer
conclusion
A C B  : 3
end
"""

EX2_LEMMA = """\
Lemma ex2 : forall A B C D:Point,
rk(A :: D :: B :: nil) = 3 ->
rk(A :: C :: D :: nil) = 2 ->
rk(C :: A :: nil) = 2 ->
rk(C :: D :: nil) = 2 ->
rk(A :: C :: B :: nil) = 3.
Proof.
"""


def import_module():
    """Find the built cdylib and import it under its module name."""
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("librankprover_py.so", "librankprover_py.dylib", "rankprover_py.dll")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "rankprover_py is not built; run\n"
            "  cargo build -p rankprover-py --release --features extension-module"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="rankprover-py-"))
    suffix = ".pyd" if newest.suffix == ".dll" else ".so"
    shutil.copy2(newest, stage / f"rankprover_py{suffix}")
    sys.path.insert(0, str(stage))
    import rankprover_py

    return rankprover_py


def main():
    rp = import_module()
    print(f"loaded rankprover_py {rp.__version__}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the duplicated per-layer conclusion
        cfg = rp.parse_config(EX2)
    assert cfg.points() == ["A", "B", "C", "D"], cfg.points()
    assert cfg.dimension == 3
    assert len(cfg.hypotheses()) == 4

    sat = rp.saturate(cfg)
    assert sat.interval(["A", "B", "C"]) == (3, 3)
    assert sat.interval(["B"]) == (1, 1)
    assert sat.entails(["A", "B", "C"], 3)
    assert sat.stats()["steps"] == sat.step_count()

    proofs = rp.prove(cfg)
    assert len(proofs) == 1
    proof = proofs[0]
    assert proof.status == "proved", proof
    assert proof.lemma == "LABC"
    assert proof.checked, "certificate must re-verify"
    assert "Lemma LABC" in proof.script
    assert rp.check(cfg, proof.trace) == "Accepted"

    # corrupting the certificate must be caught
    bad = proof.trace.replace("SUBMOD_LO 7 lo 3", "SUBMOD_LO 7 lo 4")
    assert rp.check(cfg, bad) != "Accepted"

    # goal-syntax input states the same theorem
    goal_cfg = rp.parse_goal(EX2_LEMMA)
    assert rp.match_statement(goal_cfg, cfg)

    # the brute-force oracle agrees
    assert rp.oracle_entails(cfg, ["A", "B", "C"], 3) == "yes"
    assert rp.oracle_entails(cfg, ["A", "B"], 1) == "no"
    assert rp.count_models(cfg) > 0

    # not derivable: same points, free hypotheses
    free = rp.Config(3, ["A", "B", "C", "D"], [], [(["A", "B", "C"], 3)])
    undecided = rp.prove(free)[0]
    assert undecided.status == "not-derivable"
    assert undecided.residual == (1, 3), undecided.residual

    # inconsistent hypotheses raise
    try:
        rp.prove(rp.Config(3, ["A", "B", "C"], [(["A", "B"], 2), (["A", "B", "C"], 1)], [(["A"], 1)]))
    except ValueError as e:
        assert "contradictory" in str(e).lower(), e
    else:
        sys.exit("inconsistent hypotheses should raise ValueError")

    print("smoke test OK")


if __name__ == "__main__":
    main()
