"""Regenerate the primary-CSV fixtures by running the cuspfs CLI.

Run from the frontend/ directory with the primary package installed:
    python3 fixtures/regenerate.py
"""

import os
import shutil
import tempfile

from cuspfs.cli import run

HERE = os.path.dirname(os.path.abspath(__file__))
CUSP = {
    "flavor": "cusp",
    "characteristic": {"kind": "power", "alpha": 2.0},
    "base": {"kind": "points"},
    "grading": {"smax": 6.0, "ns": 2049},
}


def main():
    out = tempfile.mkdtemp(prefix="cuspfs-fixtures-")
    run("norm-equivalence", {"cusps": [CUSP], "spec": {"k": [1, 2], "q": [2.0], "lambda": [0.0, 1.5]}}, f"{out}/ne")
    run("mr-study", {"study": {"lambdas": [0.0], "qs": [2.0], "alphas": [2.0], "T": 0.1, "dt": 4e-3, "ns": 129}}, f"{out}/mr")
    run("cusp-report", {"cusp": {**CUSP, "grading": {"smax": 5.0, "ns": 513}}, "checks": ["P.g", "M.I"]}, f"{out}/cr")
    run(
        "localization",
        {"cusp": {**CUSP, "grading": {"smax": 6.0, "ns": 769}}, "atlas": {"overlap": [0.5], "s_max": 6.0}, "spec": {"k": [1], "q": [2.0]}},
        f"{out}/loc",
    )
    run(
        "solve",
        {
            "cusp": {**CUSP, "grading": {"smax": 6.0, "ns": 257}},
            "solver": {"lambda": 0.0, "q": 2.0, "T": 0.05, "dt": 5e-3, "ns": 129, "smax": 6.0},
            "study": {"linearity": True, "orders": True},
        },
        f"{out}/solve",
    )
    wanted = [
        ("ne", ["W.eq.csv", "W.WW.csv", "S.NN.csv"]),
        ("mr", ["study.csv"]),
        ("cr", ["P.g.csv", "M.I.csv"]),
        ("loc", ["F.LC.csv"]),
        ("solve", ["run.csv", "D.D.orders.csv"]),
    ]
    dst = os.path.join(HERE, "primary")
    for sub, names in wanted:
        for name in names:
            shutil.copy(os.path.join(out, sub, name), os.path.join(dst, name))
    print(f"fixtures refreshed in {dst}")


if __name__ == "__main__":
    main()
