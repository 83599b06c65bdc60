"""Explore the hot-tier sizing model.

Search cost on a navigable graph grows roughly with the log of its size, so
serving a hot tier of ratio IR costs ln(IR*n) plus, on a miss, ln(n) more.
Under a Zipf(beta) workload the miss probability has a closed form, and so
does the cost-minimizing IR. This demo tabulates the model against the exact
discrete tail, locates the optimum three ways, and shows how it moves with
the skew.
"""

import math

import numpy as np

from hotgraph import (
    cost_curve,
    exact_miss_probability,
    expected_search_cost,
    grid_optimal_index_ratio,
    miss_probability,
    optimal_index_ratio,
)

N, BETA = 1_000_000, 1.2


def main():
    print(f"universe n = {N:,}, workload skew beta = {BETA}\n")
    print(f"{'IR':>9s} {'hot size':>9s} {'p_miss model':>13s} {'p_miss exact':>13s} {'cost':>8s}")
    for ir in (0.0001, 0.001, 0.01, 0.1, 1.0):
        model = miss_probability(ir, N, BETA)
        exact = exact_miss_probability(ir, N, BETA)
        cost = expected_search_cost(ir, N, BETA)
        print(f"{ir:>9.4g} {int(math.ceil(ir * N)):>9,d} {model:>13.4f} {exact:>13.4f} {cost:>8.3f}")
    print(f"\nsearching everything (IR=1) costs ln(n) = {math.log(N):.3f} by construction")

    best = optimal_index_ratio(N, BETA)
    grid = grid_optimal_index_ratio(N, BETA)
    ratios, costs = cost_curve(N, BETA, points=2000)
    curve_min = ratios[int(np.argmin(costs))]
    print(f"\noptimal IR, closed form:   {best:.3e}  (cost {expected_search_cost(best, N, BETA):.3f})")
    print(f"optimal IR, 10^4 grid:     {grid:.3e}")
    print(f"optimal IR, 2000-pt curve: {curve_min:.3e}")
    print(f"hot tier at the optimum: {int(math.ceil(best * N)):,} of {N:,} nodes, "
          f"cost {expected_search_cost(best, N, BETA) / math.log(N):.0%} of a full-graph search")

    print(f"\n{'beta':>6s} {'optimal IR':>12s} {'hot nodes':>10s}")
    for beta in (1.1, 1.2, 1.5, 2.0, 3.0):
        b = optimal_index_ratio(N, beta)
        print(f"{beta:>6.1f} {b:>12.3e} {int(math.ceil(b * N)):>10,d}")
    print("\nheavier skew concentrates the traffic, so the optimal hot tier shrinks")


if __name__ == "__main__":
    main()
