"""Run the verification pipeline on every shipped manifest and tabulate the outcome.

    python scripts/run_catalog.py [--samples N] [--seed S]
"""
import argparse

from lightlike.manifest import catalog_names, load_manifest
from lightlike.verify import run_theorem_ii


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'manifest':<12} {'n':>2} {'r':>2}  {'status':<18} {'failed':<22} worst residual")
    for name in catalog_names():
        m = load_manifest(name)
        out = run_theorem_ii(m.bundle(), m.torsion, m.nonmetricity,
                             m.config(args.samples, args.seed))
        worst = max(out.reports, key=lambda r: r.max_residual)
        print(f"{name:<12} {m.dimension:>2} {m.nullity:>2}  {out.status:<18} "
              f"{out.failed_condition or '-':<22} {worst.max_residual:.3e} ({worst.condition})")


if __name__ == "__main__":
    main()
