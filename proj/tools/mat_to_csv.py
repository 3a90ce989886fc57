#!/usr/bin/env python3
"""Convert Office+Caltech-10 SURF .mat files to label-first CSV plus an experiment manifest.

Each input file must hold a feature matrix (N x 800) and a label vector. Labels are
shifted to start at 0. The default keys are 'fts' and 'labels'.

    python3 tools/mat_to_csv.py --out data/office_caltech \
        A=amazon_SURF_L10.mat C=Caltech10_SURF_L10.mat D=dslr_SURF_L10.mat W=webcam_SURF_L10.mat
"""

import argparse
import json
import pathlib
import sys

import numpy as np
import scipy.io


def convert(src, dst, feature_key, label_key):
    mat = scipy.io.loadmat(src)
    for key in (feature_key, label_key):
        if key not in mat:
            raise SystemExit(f"{src}: no variable '{key}' (found {sorted(k for k in mat if not k.startswith('__'))})")
    X = np.asarray(mat[feature_key], dtype=float)
    y = np.asarray(mat[label_key]).ravel().astype(int)
    if X.shape[0] != y.shape[0]:
        raise SystemExit(f"{src}: {X.shape[0]} feature rows but {y.shape[0]} labels")
    y = y - y.min()
    np.savetxt(dst, np.column_stack([y, X]), delimiter=",", fmt=["%d"] + ["%.17g"] * X.shape[1])
    return X.shape[0], X.shape[1], int(y.max()) + 1


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("domains", nargs="+", metavar="NAME=FILE.mat")
    ap.add_argument("--out", required=True, type=pathlib.Path)
    ap.add_argument("--feature-key", default="fts")
    ap.add_argument("--label-key", default="labels")
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    entries = []
    for item in args.domains:
        name, sep, path = item.partition("=")
        if not sep:
            ap.error(f"expected NAME=FILE.mat, got '{item}'")
        n, d, c = convert(path, args.out / f"{name}.csv", args.feature_key, args.label_key)
        print(f"{name}: N={n} D={d} C={c}", file=sys.stderr)
        entries.append({"name": name, "path": f"{name}.csv", "num_classes": c})
    manifest = {"domains": entries, "fraction": 0.1, "seeds": list(range(10)), "methods": ["dabls", "bls"]}
    (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
