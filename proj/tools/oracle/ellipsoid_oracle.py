"""Closed-form oracle for the irrational ellipsoid |z1|^2/a + |z2|^2/b = 1.

The Reeb flow is linear, z_j -> exp(2 i t / r_j^2) z_j, so every quantity the
acceptance suite compares against follows from the two squared radii.  Values
are computed in 50-digit arithmetic and written as JSON; the C++ suite reads
the frozen file and never recomputes them.

    python3 tools/oracle/ellipsoid_oracle.py > tests/acceptance/oracle.json
"""

import json
import sys

import mpmath as mp

mp.mp.dps = 50


def census(a, b, t_max):
    """All orbits with period <= t_max: k-fold covers of the two axis circles."""
    out = []
    for name, r2 in (("gamma1", a), ("gamma2", b)):
        k = 1
        while k * mp.pi * r2 <= t_max:
            out.append({"orbit": name, "k": k, "T": k * mp.pi * r2})
            k += 1
    out.sort(key=lambda e: e["T"])
    return out


def cz(rotation):
    """Index of a path rotating uniformly by `rotation` turns (non-integer)."""
    assert rotation != mp.floor(rotation)
    return int(2 * mp.floor(rotation) + 1)


def index_table(own, other, k_max):
    # Along the k-fold cover of the circle in the plane with squared radius `own`,
    # the transverse plane turns k*own/other times, and the global frame adds
    # one turn per circuit.
    return [cz(k * (1 + own / other)) for k in range(1, k_max + 1)]


def main():
    a, b = mp.mpf(1), mp.sqrt(2)
    doc = {
        "r_squared": [str(a), str(b)],
        "census_tmax_10": [{"orbit": e["orbit"], "k": e["k"], "T": float(e["T"])} for e in census(a, b, 10)],
        "census_tmax_20": [{"orbit": e["orbit"], "k": e["k"], "T": float(e["T"])} for e in census(a, b, 20)],
        "mu_gamma1": index_table(a, b, 5),
        "mu_gamma2": index_table(b, a, 3),
        "lk_gamma1_gamma2": 1,
        "sl_gamma1": -1,
        "sl_gamma2": -1,
        "page_area": float(mp.pi * a),
        "page_return_time": float(mp.pi * b),
        "page_budget": float(10 * mp.pi * b),
    }
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
