"""Tabulate I1..I5 and the schedule over kbar = 10^e for one delta exponent."""
import argparse
import csv
import sys

from kmpp_lowerbound.chain import inequality_scan

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta-exp", type=float, default=1 / 120)
    ap.add_argument("--emin", type=int, default=3)
    ap.add_argument("--emax", type=int, default=300)
    ap.add_argument("--step", type=int, default=3)
    a = ap.parse_args()
    rows = inequality_scan(a.delta_exp, range(a.emin, a.emax + 1, a.step))
    wr = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    wr.writeheader()
    wr.writerows(rows)
