"""Accuracy and cardinality tables for a directory of sparse-format datasets.

Each ``<name>.txt`` file in the directory is run through the tuned 10-split
protocol and one row per dataset is appended to the combined tables.

    python3 scripts/microarray_tables.py data/ --out runs/tables --threads 4
"""

import argparse
import csv
from pathlib import Path

from mdsvm.data import load_dataset
from mdsvm.tuning import TABLE2_COLUMNS, TABLE3_COLUMNS, TuningConfig, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("data_dir")
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="runs/tables")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows2, rows3 = [], []
    for path in sorted(Path(args.data_dir).glob("*.txt")):
        data = load_dataset(path, "sparse")
        rep = run_experiment(data, TuningConfig(sigma=args.sigma), args.splits,
                             name=path.stem, threads=args.threads)
        rep.write(out / path.stem)
        agg = rep.aggregate()
        rows2.append([path.stem] + [f"{agg[c][0]:.2f}+-{agg[c][1]:.2f}" for c in TABLE2_COLUMNS[1:]])
        rows3.append([path.stem] + [f"{agg[c][0]:.2f}" for c in TABLE3_COLUMNS[1:]])
        print(rep.summary())
    for name, cols, rows in (("table2.csv", TABLE2_COLUMNS, rows2),
                             ("table3.csv", TABLE3_COLUMNS, rows3)):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            w.writerows(rows)


if __name__ == "__main__":
    main()
