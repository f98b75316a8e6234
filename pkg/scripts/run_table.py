"""Run the k-vs-probability table: experiment per k, then one merged report CSV."""
import argparse
from pathlib import Path

from kmpp_lowerbound.cli import main


def run(ks, trials, seed, out, threads=None):
    out = Path(out)
    argv = ["experiment", "--k", *map(str, ks), "--trials", str(trials), "--seed", str(seed), "--out", str(out)]
    if threads:
        argv += ["--threads", str(threads)]
    code = main(argv)
    if code:
        return code
    return main(["report", *(str(out / f"summary_k{k}.json") for k in ks), "--out", str(out / "report.csv")])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="results")
    a = ap.parse_args()
    raise SystemExit(run(a.k, a.trials, a.seed, a.out, a.threads))
