#!/usr/bin/env python3
"""Generate data/rb_ns_states.csv for Rb nS states.

C6: quantum-defect scaling C6 = 862.69 GHz um^6 (n*/66.8688)^11 anchored at 70S.
gamma: 300 K effective decay, radiative tau0 = 1.368 ns n*^2.995 plus the
blackbody rate A/n*^D * 2.14e10 / (exp(315780 B / (n*^C T)) - 1) with
A=0.134, B=0.251, C=2.567, D=4.426 (Beterov et al. 2009 fit for nS).
"""
import math
import sys

DEFECT = 3.1311804
T = 300.0


def c6(n):
    ns = n - DEFECT
    return 862.69 * (ns / 66.8688) ** 11


def gamma_per_us(n):
    ns = n - DEFECT
    tau0 = 1.368e-9 * ns ** 2.995
    bbr = 0.134 / ns ** 4.426 * 2.14e10 / (math.exp(315780.0 * 0.251 / (ns ** 2.567 * T)) - 1.0)
    return (1.0 / tau0 + bbr) * 1e-6


def main(path):
    with open(path, "w", newline="\n") as f:
        f.write("n,C6_GHz_um6,gamma_per_us,source\n")
        for n in range(20, 151, 5):
            f.write(f"{n},{c6(n):.10g},{gamma_per_us(n):.10g},"
                    "C6 n*^11 scaling from 70S (Li2003PRA); gamma 300K lifetime fit (Beterov2009PRA)\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/rb_ns_states.csv")
