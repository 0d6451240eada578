#!/usr/bin/env python3
"""Independent reference values for the statistics tests.

Computes pooled t-tests, Cohen's d and D'Agostino-Pearson K^2 with scipy on
the same inputs the C++ tests use, and writes them to
tests/fixtures/stats_oracle.json. Samples come from a splitmix64 generator
that tests/support/samples.hpp reproduces bit for bit.

    python3 tools/oracles/stats_oracle.py
"""

import json
import math
import pathlib

from scipy import stats

MASK = (1 << 64) - 1

# Published per-condition summaries: (n, mean, sd).
PUBLISHED = {
    "learning": {"reflection": (18, 5.89, 1.94), "standard": (18, 6.50, 2.06)},
    "attractiveness": {"reflection": (18, 26.22, 4.58), "standard": (18, 29.56, 4.00)},
    "stimulation": {"reflection": (18, 21.22, 3.68), "standard": (18, 23.17, 4.87)},
}

SAMPLE_A = [4.0, 7.0, 5.5, 6.0, 3.5]
SAMPLE_B = [2.0, 4.5, 3.0, 5.0, 2.5]

NORMAL_N = 500
NORMAL_SEEDS = range(1, 101)
SKEWED_N = 200
SKEWED_SEED = 2024
SMALL_NORMAL_SEED = 7
SMALL_NORMAL_N = 25


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform(self):
        # (0, 1), never 0 or 1
        return ((self.next() >> 11) + 0.5) * 2.0 ** -53

    def normal(self):
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def exponential(self):
        return -math.log(self.uniform())


def normal_sample(seed, n):
    g = SplitMix64(seed)
    return [g.normal() for _ in range(n)]


def exponential_sample(seed, n):
    g = SplitMix64(seed)
    return [g.exponential() for _ in range(n)]


def pooled(a, b):
    (na, ma, sa), (nb, mb, sb) = a, b
    res = stats.ttest_ind_from_stats(ma, sa, na, mb, sb, nb, equal_var=True)
    sp = math.sqrt(((na - 1) * sa**2 + (nb - 1) * sb**2) / (na + nb - 2))
    return {"t": float(res.statistic), "df": na + nb - 2, "p": float(res.pvalue), "d": abs(ma - mb) / sp}


def normaltest(x):
    k2, p = stats.normaltest(x)
    return {"k2": float(k2), "p": float(p)}


def main():
    out = {"published": {}, "generator": {}}
    out["published_population_sd"] = {}
    for name, groups in PUBLISHED.items():
        out["published"][name] = pooled(groups["standard"], groups["reflection"])
        # The same cells if the printed SDs used an n denominator.
        widened = {k: (n, m, s * math.sqrt(n / (n - 1))) for k, (n, m, s) in groups.items()}
        out["published_population_sd"][name] = pooled(widened["standard"], widened["reflection"])

    res = stats.ttest_ind(SAMPLE_A, SAMPLE_B, equal_var=True)
    out["five_element"] = {"a": SAMPLE_A, "b": SAMPLE_B, "t": float(res.statistic), "p": float(res.pvalue)}

    g = SplitMix64(42)
    out["generator"]["first_u64_seed42"] = [str(g.next()) for _ in range(3)]
    out["generator"]["first_normals_seed7"] = normal_sample(SMALL_NORMAL_SEED, 3)

    small = normal_sample(SMALL_NORMAL_SEED, SMALL_NORMAL_N)
    out["small_normal"] = {"seed": SMALL_NORMAL_SEED, "n": SMALL_NORMAL_N, **normaltest(small)}

    skewed = exponential_sample(SKEWED_SEED, SKEWED_N)
    out["skewed"] = {"seed": SKEWED_SEED, "n": SKEWED_N, **normaltest(skewed)}

    ps = [normaltest(normal_sample(s, NORMAL_N))["p"] for s in NORMAL_SEEDS]
    out["normal_calibration"] = {
        "n": NORMAL_N,
        "seeds": [NORMAL_SEEDS.start, NORMAL_SEEDS.stop - 1],
        "p_above_0_05": sum(p > 0.05 for p in ps),
        "p_values": ps,
    }

    path = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "stats_oracle.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {path}")
    for name, r in out["published"].items():
        print(f"{name:15s} t={r['t']:.4f} df={r['df']} p={r['p']:.4f} d={r['d']:.4f}")
    print(f"normal calibration: {out['normal_calibration']['p_above_0_05']}/100 with p > 0.05")
    print(f"skewed: K2={out['skewed']['k2']:.4f} p={out['skewed']['p']:.3g}")


if __name__ == "__main__":
    main()
