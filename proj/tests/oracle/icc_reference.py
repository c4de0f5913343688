#!/usr/bin/env python3
"""Reference ICC implementation used to freeze test fixtures.

Computes two-way ANOVA mean squares and the average-measures ICC forms
ICC(2,k) (two-way random, absolute agreement) and ICC(3,k) (two-way
mixed, consistency) with F tests and 95% confidence intervals, following
McGraw & Wong (1996).  Self-checks against the published Shrout-Fleiss
example matrix before writing tests/data/icc_fixtures.json.

Run from the repository root:  python3 tests/oracle/icc_reference.py
"""

import json
import math
import pathlib

import numpy as np
from scipy.stats import f as fdist

ROOT = pathlib.Path(__file__).resolve().parents[2]


def anova(x):
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    grand = x.mean()
    rows = x.mean(axis=1)
    cols = x.mean(axis=0)
    ssr = k * np.sum((rows - grand) ** 2)
    ssc = n * np.sum((cols - grand) ** 2)
    sse = np.sum((x - rows[:, None] - cols[None, :] + grand) ** 2)
    return {
        "msr": ssr / (n - 1),
        "msc": ssc / (k - 1),
        "mse": sse / ((n - 1) * (k - 1)),
        "ssr": ssr,
        "ssc": ssc,
        "sse": sse,
    }


def icc_reports(x, alpha=0.05):
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    a = anova(x)
    msr, msc, mse = a["msr"], a["msc"], a["mse"]

    df1 = n - 1
    df2 = (n - 1) * (k - 1)
    fval = msr / mse
    pval = fdist.sf(fval, df1, df2)

    # ICC(3,k): consistency, average measures.
    est3 = (msr - mse) / msr
    fl3 = fval / fdist.ppf(1 - alpha / 2, df1, df2)
    fu3 = fval * fdist.ppf(1 - alpha / 2, df2, df1)
    ci3 = (1 - 1 / fl3, 1 - 1 / fu3)

    # ICC(2,k): absolute agreement, average measures.  CI comes from the
    # single-measure bounds stepped up with Spearman-Brown.
    est2 = (msr - mse) / (msr + (msc - mse) / n)
    r1 = (msr - mse) / (msr + (k - 1) * mse + k * (msc - mse) / n)
    fj = msc / mse
    vn = df2 * (k * r1 * fj + n * (1 + (k - 1) * r1) - k * r1) ** 2
    vd = df1 * k**2 * r1**2 * fj**2 + (n * (1 + (k - 1) * r1) - k * r1) ** 2
    v = vn / vd
    fu = fdist.ppf(1 - alpha / 2, v, df1)
    fl = fdist.ppf(1 - alpha / 2, df1, v)
    low1 = n * (msr - fu * mse) / (fu * (k * msc + (k * n - k - n) * mse) + n * msr)
    up1 = n * (fl * msr - mse) / (k * msc + (k * n - k - n) * mse + n * fl * msr)
    ci2 = (low1 * k / (1 + (k - 1) * low1), up1 * k / (1 + (k - 1) * up1))

    def report(kind, est, ci):
        return {
            "kind": kind,
            "estimate": est,
            "f_value": fval,
            "df1": df1,
            "df2": df2,
            "p_value": pval,
            "ci95_low": ci[0],
            "ci95_high": ci[1],
        }

    return a, report("icc2k", est2, ci2), report("icc3k", est3, ci3)


SHROUT_FLEISS = [
    [9, 2, 5, 8],
    [6, 1, 3, 2],
    [8, 4, 6, 8],
    [7, 1, 2, 6],
    [10, 5, 6, 9],
    [6, 2, 4, 7],
]


def self_check():
    _, r2, r3 = icc_reports(SHROUT_FLEISS)
    # Published values (Shrout & Fleiss 1979; psych::ICC agrees).
    assert abs(r2["estimate"] - 0.62) < 0.005, r2
    assert abs(r3["estimate"] - 0.9093) < 0.001, r3
    assert abs(r2["f_value"] - 11.0272) < 0.001, r2
    assert abs(r2["p_value"] - 0.000135) < 0.00005, r2
    print("self-check ok:")
    print("  icc2k", {k: round(v, 6) for k, v in r2.items() if k != "kind"})
    print("  icc3k", {k: round(v, 6) for k, v in r3.items() if k != "kind"})


def gen_matrices(rng):
    """Random matrices with genuine subject effects plus rater bias/noise."""
    specs = []
    for i in range(24):
        n = int(rng.integers(4, 31))
        k = int(rng.integers(2, 21))
        subj = rng.uniform(35, 95, size=n)
        bias = rng.normal(0, rng.uniform(0.0, 4.0), size=k)
        noise_sd = rng.uniform(1.0, 12.0)
        x = subj[:, None] + bias[None, :] + rng.normal(0, noise_sd, size=(n, k))
        if i % 3 == 0:
            x = np.round(x)  # integer-score matrices, like real grading data
        if i % 7 == 0:
            # weak subject signal so some p-values land in (1e-4, 0.5)
            x = rng.uniform(60, 75, size=(n, k)) + rng.normal(0, 6, size=(n, k))
        specs.append(x)
    return specs


def main():
    self_check()
    rng = np.random.default_rng(20250810)

    fixtures = []

    def add(name, matrix):
        m = np.asarray(matrix, dtype=float)
        a, r2, r3 = icc_reports(m)
        fixtures.append(
            {
                "name": name,
                "values": [[float(v) for v in row] for row in m],
                "anova": {k: float(a[k]) for k in ("msr", "msc", "mse")},
                "icc2k": r2,
                "icc3k": r3,
            }
        )

    add("shrout_fleiss_6x4", SHROUT_FLEISS)
    add(
        "graded_8x3",
        [
            [78, 82, 80],
            [55, 60, 58],
            [92, 95, 90],
            [40, 45, 44],
            [66, 70, 69],
            [85, 83, 88],
            [71, 75, 72],
            [60, 58, 63],
        ],
    )
    add(
        "coarse_5x2",
        [[10, 12], [20, 19], [30, 33], [42, 40], [55, 52]],
    )
    for i, m in enumerate(gen_matrices(rng)):
        add(f"random_{i:02d}_{m.shape[0]}x{m.shape[1]}", m)

    # Frozen F-distribution spot values for the numerics unit tests.
    f_points = []
    for (fv, d1, d2) in [
        (2.5, 3, 17),
        (11.0266, 5, 15),
        (1.0, 1, 1),
        (0.4, 8, 2),
        (35.0, 29, 551),
        (4.2, 2.75, 9.3),
    ]:
        f_points.append(
            {
                "f": fv,
                "df1": d1,
                "df2": d2,
                "sf": float(fdist.sf(fv, d1, d2)),
                "cdf": float(fdist.cdf(fv, d1, d2)),
            }
        )
    q_points = []
    for (p, d1, d2) in [
        (0.975, 5, 15),
        (0.975, 15, 5),
        (0.975, 29, 3.77),
        (0.95, 1, 40),
        (0.5, 6, 6),
        (0.025, 9, 12),
    ]:
        q_points.append(
            {"p": p, "df1": d1, "df2": d2, "quantile": float(fdist.ppf(p, d1, d2))}
        )

    out = {
        "alpha": 0.05,
        "matrices": fixtures,
        "f_tail": f_points,
        "f_quantile": q_points,
    }
    path = ROOT / "tests" / "data" / "icc_fixtures.json"
    path.write_text(json.dumps(out, indent=1))
    print(f"wrote {path} with {len(fixtures)} matrices")


if __name__ == "__main__":
    main()
