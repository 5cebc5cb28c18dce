"""How the Lie-derivative imbalance of a non-Killing radical frame shows up downstream.

For g = diag(0, 1 + a*t^2, 1) with ξ = d/dt and τ = dt, sweep the amplitude
``a`` and report the radical Lie balance residual, the parallel-coframe
residual of the Levi-Civita connection of ḡ, and their ratio κ.

    python scripts/contrapositive_sweep.py [--samples N] [--amplitudes 0 0.01 0.1 1]
"""
import argparse

from lightlike.connection import levi_civita_connection
from lightlike.degenerate import AugmentedMetric, DegenerateMetricBundle
from lightlike.sampling import VerificationConfig
from lightlike.tensor import field_from_strings
from lightlike.verify import check_parallel_coframe, check_radical_lie_balance


def fixture(a: float) -> DegenerateMetricBundle:
    metric = field_from_strings("ll", [["0", "0", "0"], ["0", "1 + a*x0^2", "0"],
                                       ["0", "0", "1"]], 3, {"a": a})
    return DegenerateMetricBundle(
        metric=metric,
        nullity=1,
        radical_frame=(field_from_strings("u", ["1", "0", "0"], 3),),
        coframe=(field_from_strings("l", ["1", "0", "0"], 3),),
        domain=[(-1.0, 1.0)] * 3,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--amplitudes", type=float, nargs="+",
                        default=[0.0, 1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0])
    args = parser.parse_args()
    cfg = VerificationConfig(sample_count=args.samples, seed=args.seed)

    print(f"{'a':>10}  {'balance':>11}  {'LC |∇τ|':>11}  {'kappa':>9}")
    for a in args.amplitudes:
        b = fixture(a)
        balance = check_radical_lie_balance(b, None, None, cfg).max_residual
        parallel = check_parallel_coframe(levi_civita_connection(AugmentedMetric(b)), b,
                                          cfg).max_residual
        kappa = balance / parallel if parallel > 0 else float("nan")
        print(f"{a:>10.2e}  {balance:>11.4e}  {parallel:>11.4e}  {kappa:>9.4f}")


if __name__ == "__main__":
    main()
