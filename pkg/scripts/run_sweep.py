"""Run one or more experiment configs and print per-group means.

    python3 scripts/run_sweep.py scripts/configs/fig1_n.json scripts/configs/fig1_kappa.json
"""
import argparse
import time
from pathlib import Path

from rectgauss.experiment import ExperimentConfig, rows_to_csv, run_experiment, summarize

GROUP_KEY = {"sweep_n": "n", "sweep_d": "d", "sweep_kappa": "kappa", "single": "n", "table1": "n"}


def report(cfg, rows):
    key = GROUP_KEY[cfg.mode]
    if cfg.mode == "table1":
        for r in rows:
            if r["status"] == "summary":
                print(f"  n={r['n']:>6}  success={r['success']:.2f}")
        return
    s = summarize(rows, key, "sigma_rel_err")
    b = summarize(rows, key, "bias_rel_err")
    kl = summarize(rows, key, "kl")
    print(f"  {key:>8}  sigma_err  bias_err   kl")
    for g in sorted(s):
        print(f"  {g:>8g}  {s[g]:.5f}    {b[g]:.5f}    {kl.get(g, float('nan')):.5f}")
    failed = [r for r in rows if r["status"].startswith("error")]
    if failed:
        print(f"  {len(failed)} runs failed, first: {failed[0]['status']}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--seeds", type=int, default=None, help="override the number of seeds")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    for path in args.configs:
        cfg = ExperimentConfig.load(path)
        if args.seeds:
            cfg.seeds = args.seeds
        t0 = time.time()
        rows = run_experiment(cfg, workers=args.workers)
        print(f"{path}: {len(rows)} rows in {time.time() - t0:.1f}s")
        report(cfg, rows)
        if cfg.output:
            out = Path(cfg.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(rows_to_csv(rows))
            print(f"  wrote {out}")


if __name__ == "__main__":
    main()
