"""Tune the PID baseline on the in_place scenario and print the winning gains.

Usage: python scripts/tune_pid.py [--csv table.csv]
"""

import argparse
import csv

from userfollow.tuning import tune_pid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", help="write the full grid table here")
    args = ap.parse_args()
    best, table = tune_pid()
    obj, kp, ki, kd = best
    print(f"best: kp={kp} ki={ki} kd={kd} mean|e|={obj * 100:.4f} cm")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kp", "ki", "kd", "mean_abs_error_m"])
            w.writerows(table)


if __name__ == "__main__":
    main()
