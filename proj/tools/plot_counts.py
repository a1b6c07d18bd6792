#!/usr/bin/env python3
"""Plot raw vs reconstructed detection counts from a comparison CSV."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("comparison", help="CSV with frame,count_raw,count_recon")
    ap.add_argument("-o", "--out", default="counts.png")
    args = ap.parse_args()

    frames, raw, recon = [], [], []
    with open(args.comparison, newline="") as f:
        for row in csv.DictReader(f):
            frames.append(int(row["frame"]))
            raw.append(int(row["count_raw"]))
            recon.append(int(row["count_recon"]))

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(frames, raw, label="raw")
    ax.plot(frames, recon, label="reconstructed")
    ax.set_xlabel("frame")
    ax.set_ylabel("pixels above threshold")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
