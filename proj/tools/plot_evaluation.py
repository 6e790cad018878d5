#!/usr/bin/env python3
# Copyright 2026 The dpr Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Plots the CSV files written by `dpr evaluate`.

    plot_evaluation.py combined OUT_DIR   # combined_errors.csv
    plot_evaluation.py trend OUT_DIR      # trend_points.csv, trend_fits.csv
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_combined(out_dir: pathlib.Path) -> pathlib.Path:
    errors = pd.read_csv(out_dir / "combined_errors.csv")
    kinds = sorted(errors["statistic"].unique())
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([errors.loc[errors["statistic"] == k, "normalized_error"] for k in kinds])
    ax.set_xticks(range(1, len(kinds) + 1), kinds)
    ax.axhline(0.10, color="grey", linestyle="--", linewidth=1, label="10% target")
    ax.set_ylabel("normalized absolute error")
    ax.set_title(f"Combined release, {errors['seed'].nunique()} seeds, "
                 f"{errors['variable'].nunique()} variables")
    ax.legend()
    path = out_dir / "combined_errors.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def plot_trend(out_dir: pathlib.Path, seed: int | None) -> pathlib.Path:
    points = pd.read_csv(out_dir / "trend_points.csv")
    fits = pd.read_csv(out_dir / "trend_fits.csv")
    seed = int(fits["seed"].iloc[0]) if seed is None else seed
    p = points[points["seed"] == seed]
    f = fits[fits["seed"] == seed].iloc[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(p["time"], p["true_mean"], s=12, color="black", label="true means")
    ax.scatter(p["time"], p["dp_mean"], s=12, color="tab:orange", label="DP means")
    span = pd.Series([p["time"].min(), p["time"].max()])
    ax.plot(span, f["true_intercept"] + f["true_slope"] * span, color="black",
            label=f"true trend (slope {f['true_slope']:.4f})")
    ax.plot(span, f["dp_intercept"] + f["dp_slope"] * span, color="tab:orange",
            label=f"DP trend (slope {f['dp_slope']:.4f})")
    ax.set_xlabel("year")
    ax.set_ylabel("share")
    ax.set_title(f"Survey trend, seed {seed}")
    ax.legend()
    path = out_dir / f"trend_seed{seed}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("experiment", choices=["combined", "trend"])
    parser.add_argument("out_dir", type=pathlib.Path)
    parser.add_argument("--seed", type=int, help="trend seed to draw (default: first)")
    args = parser.parse_args()
    if args.experiment == "combined":
        print(plot_combined(args.out_dir))
    else:
        print(plot_trend(args.out_dir, args.seed))


if __name__ == "__main__":
    main()
