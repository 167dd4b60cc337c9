"""Brute-force reference for toy_amp on an 11-point-per-axis grid.

Writes the lowest-power grid point that meets every constraint, and the number of
feasible grid points, to toy_amp_grid.json next to this script.
"""
import itertools
import json
import math
import pathlib

LB = [0.1, 0.1, 10.0, 10.0, 0.1, 0.5]
UB = [5.0, 5.0, 500.0, 500.0, 5.0, 10.0]
AXES = [[lo + (hi - lo) * k / 10 for k in range(11)] for lo, hi in zip(LB, UB)]


def feasible_power(gm1, gm2, i1, i2, cc, cl):
    gm1, gm2, i1, i2, cc, cl = gm1 * 1e-3, gm2 * 1e-3, i1 * 1e-6, i2 * 1e-6, cc * 1e-12, cl * 1e-12
    gain_db = 20 * math.log10((gm1 / (0.1 * i1)) * (gm2 / (0.1 * i2)))
    gbw = gm1 / (2 * math.pi * cc)
    p2 = gm2 / (2 * math.pi * cl)
    pm = 90 - math.degrees(math.atan(gbw / p2))
    slew = i1 / cc * 1e-6
    ok = (gain_db >= 60 and gbw * 1e-6 >= 30 and pm >= 60 and slew >= 20
          and gm1 / i1 <= 25 and gm2 / i2 <= 25)
    return 1.8 * (i1 + i2) if ok else None


def main():
    best, best_point, count = math.inf, None, 0
    for point in itertools.product(*AXES):
        p = feasible_power(*point)
        if p is None:
            continue
        count += 1
        if p < best:
            best, best_point = p, point
    out = {"points_per_axis": 11, "feasible_points": count, "best_power_w": best, "best_design": list(best_point)}
    path = pathlib.Path(__file__).with_name("toy_amp_grid.json")
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out))


if __name__ == "__main__":
    main()
