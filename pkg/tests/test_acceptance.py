"""End-to-end acceptance criteria, each at its stated tolerance.

The suite runs twice into one directory: the first pass through the library,
the second through the command line, which also settles the determinism
criterion by comparing the report bytes with the first pass. One
``[PASS]``/``[FAIL]`` line per criterion is printed to the terminal.
"""

import pytest

from multiloc.cli import main
from multiloc.eval import read_report_csv
from multiloc.repro import run_suite

pytestmark = pytest.mark.slow

CRITERIA = [f"C{i}" for i in range(1, 12)]


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("repro")
    first = run_suite(out, seed=0)
    first_bytes = {p.name: p.read_bytes() for p in first["files"] if p.suffix == ".csv"}
    code = main(["repro-suite", "--out", str(out), "--seed", "0"])
    lines = (out / "criteria.txt").read_text().splitlines()
    return {"out": out, "first": first, "first_bytes": first_bytes, "code": code,
            "lines": {line.split()[1]: line for line in lines}}


@pytest.mark.parametrize("cid", CRITERIA)
def test_criterion(suite, cid, capsys):
    line = suite["lines"][cid]
    with capsys.disabled():
        print("\n" + line)
    assert line.startswith("[PASS]"), line


def test_determinism_compared_bytes(suite):
    out = suite["out"]
    for name, blob in suite["first_bytes"].items():
        assert (out / name).read_bytes() == blob, name
    assert "byte-identical to the previous run" in suite["lines"]["C11"]


def test_cli_exit_status_matches_verdicts(suite):
    all_pass = all(line.startswith("[PASS]") for line in suite["lines"].values())
    assert suite["code"] == (0 if all_pass else 1)
    assert (suite["out"] / "manifest_repro_suite.json").exists()


def test_fusion_ablation(suite, capsys):
    rows = {(r["trajectory"], r["sensor"]): float(r["mean_cm"])
            for r in read_report_csv(suite["out"] / "report.csv")}
    fused = rows[("grid-even", "radio")]
    best = min(rows[("grid-even", "radio-cov")], rows[("grid-even", "radio-cir")])
    ok = fused <= 1.1 * best
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] fusion ablation: fused {fused:.3f} cm vs best "
              f"single {best:.3f} cm (bound: fused <= 1.1 x best single)")
    assert ok
