"""Success rate against p for L=0 and L=1 and the crossing estimate.

    python3 scripts/sweep_crossing.py [configs/suppression.json] [--workers N]
"""

import argparse
from pathlib import Path

from artifact.experiment import ExperimentConfig, crossing_reports, rows_to_csv, run_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?", default=str(Path(__file__).parent / "configs" / "suppression.json"))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config, workers=args.workers, trials=args.trials)
    rows = run_sweep(cfg, lambda r: print(f"R={r.R} L={r.L} p={r.p:g}: {r.success_rate:.4f} "
                                          f"[{r.wilson_lo:.4f}, {r.wilson_hi:.4f}] {r.wall_time:.1f}s"))
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.out).write_text(rows_to_csv(rows))
    for rep in crossing_reports(rows):
        print(rep.line())


if __name__ == "__main__":
    main()
