"""Random-projection consistency for the Gaussian mean model.

Projects one synthetic dataset repeatedly at each J with the exact posterior
as weighting and reports the mean absolute error of the projected Fisher
inner products against the closed form, plus the log-log slope.

    python3 scripts/projection_trend.py --reps 200
"""

import argparse

from hilbertcoresets.experiments import projection_error_trend


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--J", default="10,100,1000,10000")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--N", type=int, default=20)
    ap.add_argument("--D", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    J_list = [int(j) for j in args.J.split(",")]
    errors, slope = projection_error_trend(J_list, reps=args.reps, N=args.N, D=args.D, seed=args.seed)
    for J, e in zip(J_list, errors):
        print(f"J={J:>6}  mean |error| {e:.4g}")
    print(f"log-log slope {slope:.3f} (1/sqrt(J) gives -0.5)")


if __name__ == "__main__":
    main()
