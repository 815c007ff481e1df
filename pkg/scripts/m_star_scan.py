"""L(m, delta) over odd m, the smallest m with L > 1, and the Fourier-pattern sweep there."""

import argparse

from resolimit.certificates import certificate_feasibility, fourier_patterns
from resolimit.converse import ConverseParams, L_numeric, build_support, m_delta_threshold, smallest_odd_m

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=3.0)
    ap.add_argument("--m-max", type=int, default=401)
    a = ap.parse_args()
    for m in range(smallest_odd_m(a.delta), a.m_max + 1, 2):
        print(f"m={m:4d}  L={L_numeric(ConverseParams(m, a.delta)).L:.6g}")
    m_star = m_delta_threshold(a.delta, "numeric", cap=a.m_max)
    print(f"m* = {m_star}   analytic threshold = {m_delta_threshold(a.delta)}")
    X = build_support(ConverseParams(m_star, a.delta))
    for j, u in enumerate(fourier_patterns(X.s)):
        fr = certificate_feasibility(X, u, m_star)
        print(f"pattern {j}: {fr.status:12s} t* in [{fr.lower_bound:.6g}, {fr.best_offmax:.6g}]")
