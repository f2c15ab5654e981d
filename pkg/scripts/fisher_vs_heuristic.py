"""Compare the numeric Bernoulli phase uncertainty with the 1/(V N sqrt(eta)) rule.

At V = 1 the two agree, and they agree at every V when eta_i = 1. With
eta_i < 1 and V < 1 the post-selection failures add Bernoulli noise that the
heuristic ignores, so it becomes optimistic.

Usage: python3 scripts/fisher_vs_heuristic.py
"""

import math

from mzphoton.interferometer import SUPPORTED_CASES, FringeModel, analytic_fringe_model
from mzphoton.metrology import fisher_precision_oracle


def main():
    print(f"{'input':>5} {'pattern':>7} {'V':>5} {'numeric':>9} {'heuristic':>9} {'ratio':>7}")
    for case in SUPPORTED_CASES:
        base = analytic_fringe_model(*case)
        for v in (1.0, 0.95, 0.9, 0.8):
            m = FringeModel(base.n_fold, base.eta_i, v, base.phase_origin)
            _, dphi = fisher_precision_oracle(m)
            heuristic = 1 / (v * m.n_fold * math.sqrt(m.eta_i))
            print(f"{case[0].value:>5} {case[1].value:>7} {v:5.2f} {dphi:9.4f} {heuristic:9.4f} {dphi / heuristic:7.3f}")


if __name__ == "__main__":
    main()
