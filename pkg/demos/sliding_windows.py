"""Show the sliding-window search on one scheduling instance.

Sorts a small population by round energy, evolves one DE population per
window, and compares the per-window winners against the exhaustive
optimum so the effect of the window width is visible end to end.
"""

import itertools
import math

import numpy as np

from fedsched.de import DeParams, build_windows, evolve_window, sort_by_energy
from fedsched.objective import EvaluationContext
from fedsched.scenario import substream

K, N = 12, 4


def make_context(rng):
    energy = np.exp(rng.uniform(np.log(1e2), np.log(1e6), size=K))
    weights = rng.uniform(1e5, 1e7, size=K) * rng.uniform(0.0, 3.0, size=K)
    return EvaluationContext(cr_weights=weights, per_ue_total_j=energy,
                             zeta=5.0, beta=0.7, n_selected=N)


def exhaustive_best(ctx):
    best = (np.inf, None)
    for combo in itertools.combinations(range(K), N):
        mask = np.zeros(K, dtype=np.int8)
        mask[list(combo)] = 1
        best = min(best, (ctx.mask_objective(mask), tuple(combo)))
    return best


def main():
    ctx = make_context(substream(11, "demo-instance"))
    order = sort_by_energy(ctx.per_ue_total_j)
    print("UEs by round energy (cheapest first):")
    print("  " + "  ".join(f"{i}:{ctx.per_ue_total_j[i]:.0f}J" for i in order))

    best_obj, best_combo = exhaustive_best(ctx)
    print(f"\nexhaustive optimum over C({K},{N})={math.comb(K, N)} subsets: "
          f"{sorted(best_combo)} at objective {best_obj:.4e}")

    params = DeParams(population_m=20, generations=40)
    for window_len in (N, 8, K):
        windows = build_windows(order, window_len)
        rows = []
        for win in windows:
            indiv, mask = evolve_window(
                win, ctx, params, substream(11, "demo-run", window_len, win.offset))
            rows.append((indiv.objective, win.offset, mask))
        rows.sort(key=lambda r: (r[0], r[1]))
        obj, offset, mask = rows[0]
        picked = sorted(np.flatnonzero(mask).tolist())
        gap = obj / best_obj if best_obj != 0 else float("nan")
        print(f"\nW={window_len:2d}: {len(windows)} window(s), "
              f"winner at offset {offset}")
        print(f"  schedule {picked}, objective {obj:.4e} "
              f"({gap:.4f}x the exhaustive optimum)")


if __name__ == "__main__":
    main()
