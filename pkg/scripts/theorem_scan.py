"""theorem_bound over a range of k, flagging where it fails to decrease."""
import argparse
import csv
import sys

from kmpp_lowerbound.chain import theorem_bound_scan

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta-exp", type=float, default=1 / 120)
    ap.add_argument("--kmin", type=int, default=2)
    ap.add_argument("--kmax", type=int, default=200)
    a = ap.parse_args()
    rows = theorem_bound_scan(a.delta_exp, range(a.kmin, a.kmax + 1))
    wr = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    wr.writeheader()
    wr.writerows(rows)
