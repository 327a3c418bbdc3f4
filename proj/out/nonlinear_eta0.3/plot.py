#!/usr/bin/env python3
"""Plots the curves written next to this script.

usage: plot.py [entries ...]   (1-based gamma entries, default: all)
"""
import csv
import math
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(here, name), newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def db(v):
    return 10.0 * math.log10(v) if v > 0 else float("nan")


head, rows = load("mean_curves.csv")
ks = (len(head) - 1) // 2
picked = [int(a) for a in sys.argv[1:]] or list(range(1, ks + 1))
it = [r[0] for r in rows]
fig, ax = plt.subplots()
for e in picked:
    ax.plot(it, [r[e] for r in rows], "b--", linewidth=0.8)
    ax.plot(it, [r[ks + e] for r in rows], "r-", linewidth=0.8)
ax.set_xlabel("iteration")
ax.set_ylabel("gamma entries")
fig.savefig(os.path.join(here, "mean_curves.png"), dpi=150)

head, rows = load("msd.csv")
it = [r[0] for r in rows]
fig, ax = plt.subplots()
ax.plot(it, [db(r[1]) for r in rows], "b--", label="experimental")
ax.plot(it, [db(r[2]) for r in rows], "r-", label="theoretical")
if not math.isnan(rows[0][3]):
    ax.plot(it, [db(r[3]) for r in rows], "k:", label="steady state")
ax.set_xlabel("iteration")
ax.set_ylabel("MSD (dB)")
ax.legend()
fig.savefig(os.path.join(here, "msd.png"), dpi=150)
