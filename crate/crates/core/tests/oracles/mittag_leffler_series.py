"""Brute-force Mittag-Leffler oracle.

Sums E_a(z) = sum_{n>=0} z^n / Gamma(a n + 1) at 200 significant digits until
terms fall below 1e-30 (after the terms have started to decrease), and writes
the frozen reference table used by the Rust tests.

    python3 mittag_leffler_series.py > ../fixtures/mittag_leffler_oracle.csv
"""

import random

import mpmath as mp

mp.mp.dps = 200

ALPHAS = ["0.3", "0.5", "0.6", "0.9", "1", "1.5"]
SAMPLES = 500


def ml_series(alpha, z):
    total = mp.mpc(0)
    n = 0
    prev = None
    while True:
        term = z**n / mp.gamma(alpha * n + 1)
        total += term
        mag = abs(term)
        if n > 5 and mag < mp.mpf("1e-30") and prev is not None and mag <= prev:
            break
        prev = mag
        n += 1
    return total


def main():
    rng = random.Random(20170411)
    print("alpha,z_re,z_im,e_re,e_im")
    for k in range(SAMPLES):
        alpha_s = ALPHAS[k % len(ALPHAS)]
        alpha = mp.mpf(alpha_s)
        radius = 5.0 * rng.random() ** 0.5
        if k % 3 == 0:
            # real axis, both signs
            z = complex(radius if rng.random() < 0.5 else -radius, 0.0)
        else:
            theta = rng.uniform(-3.141592653589793, 3.141592653589793)
            z = complex(radius * mp.cos(theta), radius * mp.sin(theta))
        # round to doubles so the Rust side sees exactly the same argument
        zr = float(z.real)
        zi = float(z.imag)
        e = ml_series(alpha, mp.mpc(zr, zi))
        print(
            f"{alpha_s},{zr!r},{zi!r},"
            f"{mp.nstr(e.real, 25, min_fixed=-1, max_fixed=-1)},"
            f"{mp.nstr(e.imag, 25, min_fixed=-1, max_fixed=-1)}"
        )


if __name__ == "__main__":
    main()
