"""Shared helpers for the experiment scripts."""
import argparse
import math

import numpy as np


def parser(description, samples):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional CSV path")
    return p


def mean_se(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
