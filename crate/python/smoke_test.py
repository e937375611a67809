#!/usr/bin/env python3
"""Smoke test for the cooplab_py extension module.

Builds the extension with cargo if needed, stages the shared library under
a temp directory as ``cooplab_py.so``, imports it, and exercises the main
types and operations. Exits non-zero on the first failure.

Usage: python3 python/smoke_test.py [--release]
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_stage(release: bool) -> Path:
    profile = "release" if release else "debug"
    cmd = ["cargo", "build", "-p", "cooplab-py"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=REPO, check=True)
    built = REPO / "target" / profile / "libcooplab_py.so"
    if not built.exists():
        sys.exit(f"expected extension at {built}")
    stage = Path(tempfile.mkdtemp(prefix="cooplab-py-"))
    shutil.copy2(built, stage / "cooplab_py.so")
    return stage


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    release = "--release" in sys.argv[1:]
    stage = build_and_stage(release)
    sys.path.insert(0, str(stage))
    import cooplab_py as cl

    # taxonomy and payoffs
    assert cl.classify_game(8, 7) == "harmony"
    assert cl.classify_game(2, 12) == "prisoners_dilemma"
    assert cl.classify_game(7, 12) == "snowdrift"
    assert cl.classify_game(2, 7) == "stag_hunt"
    assert cl.classify_game(5, 10) == "non_standard"
    assert cl.payoff(6, 11, "cooperate", "cooperate") == 10
    assert cl.payoff(6, 11, "cooperate", "defect") == 6
    assert cl.payoff(6, 11, "defect", "cooperate") == 11

    # equilibrium computation, both routes
    assert approx(cl.replicator_step(0.5, 8, 12), 0.625)
    assert approx(cl.interior_fixed_point(8, 12), 0.6)
    assert cl.interior_fixed_point(8, 7) is None
    sim = cl.simulate(8, 12)
    assert sim["outcome"] == "mixed_equilibrium"
    assert abs(sim["terminal_x"] - 0.6) <= 0.1
    assert cl.stability(2, 7) == {"kind": "bistable", "interior_x": 0.5}
    assert cl.nash(2, 6) == 1.0 and cl.nash(2, 8) == 0.0 and cl.nash(2, 7) == 0.5

    # matrices end to end
    nash = cl.nash_matrix("original")
    assert len(nash) == 121
    assert approx(cl.region_mean(nash, "original"), 0.5, 1e-9)
    mix = cl.mixture("original")
    assert mix.get(8, 7) == 0.94
    assert mix.get(2, 12) == 0.23
    metrics = cl.compare(nash, nash, "original")
    assert metrics["msd"] == 0.0 and approx(metrics["pearson_r"], 1.0)

    # csv round trip and rendering
    csv_path = stage / "nash.csv"
    nash.write_csv(csv_path)
    again = cl.CooperationMatrix.read_csv(csv_path)
    assert again.cells() == nash.cells()
    svg_path = stage / "nash.svg"
    cl.render(nash, svg_path, outline_original=True)
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and svg.count('class="orig"') == 121

    # prompt construction
    bundle = cl.prompt(6, 11)
    assert bundle["system"] == "You are a helpful assistant"
    assert "This one-shot game, is made of only one round" in bundle["user"]
    assert "9*10 = 90 euros" in bundle["user"]
    assert "If you choose A and the other player chooses B. You earn 6 points" in bundle["user"]
    swapped = cl.prompt(6, 11, b_cooperates=True)
    assert "If you choose B and the other player chooses B. You earn 10 points" in swapped["user"]

    # offline experiment through the same pipeline the CLI uses
    summary = cl.mock_run(stage / "run", grid="3x3", plays=5, seed=1)
    assert summary["mean"] == 1.0
    assert summary["rounds"] == 1
    assert Path(summary["matrix_csv"]).exists()
    assert summary["matrix"].get(0, 0) == 1.0

    relaxed = cl.mock_run(stage / "run-relaxed", grid="1x1", plays=3, seed=2, verifier="bad")
    assert relaxed["relaxed_games"] == 1
    assert relaxed["rounds"] == 3

    print("smoke test passed:", cl.__version__, f"({'release' if release else 'debug'})")


if __name__ == "__main__":
    main()
