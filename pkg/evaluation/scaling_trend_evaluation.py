# evaluation/scaling_trend_evaluation.py
"""Trend of the composite cop's sensor count over a radius grid at fixed n."""
import json
from typing import Dict, List, Optional

from backend.services.experiment_service import ExperimentSpec, scaling_study, trend_statistics


class ScalingTrendEvaluator:
    def __init__(self, n: int = 1_000_000, r_values: Optional[List[float]] = None, trials: int = 5,
                 profile: str = "desk", seed: int = 0, workers: int = 1, out: str = "scaling_trend.csv"):
        self.spec = ExperimentSpec(
            n_values=[n],
            r_values=r_values,
            r_points=6,
            trials=trials,
            profile=profile,
            master_seed=seed,
            lower=False,
            workers=workers,
            out=out,
        )

    def run_full_evaluation(self) -> Dict:
        print("🚀 Starting scaling-trend evaluation...")
        frame = scaling_study(self.spec)
        trend = trend_statistics(frame, "zeta_upper", seed=self.spec.master_seed)
        upper = frame[frame["quantity"] == "zeta_upper"]
        by_r = upper.groupby("r")["value"].mean()
        results = {
            "n": self.spec.n_values[0],
            "mean_k_by_r": {f"{r:.4g}": float(v) for r, v in by_r.items()},
            "spearman": trend.rho,
            "ci": [trend.ci_low, trend.ci_high],
            "increasing": trend.increasing,
            "csv": self.spec.out,
        }
        self._print_results(results)
        return results

    def _print_results(self, results: Dict):
        print("\n" + "=" * 60)
        print("📈 SCALING TREND")
        print("=" * 60)
        for r, k in results["mean_k_by_r"].items():
            print(f"  r={r:>8}: mean k = {k:.1f}")
        print(f"\n  Spearman rho: {results['spearman']:.3f}  95% CI [{results['ci'][0]:.3f}, {results['ci'][1]:.3f}]")
        print(f"  Increasing:   {results['increasing']}")
        print("=" * 60)


if __name__ == "__main__":
    evaluator = ScalingTrendEvaluator()
    results = evaluator.run_full_evaluation()

    # Save results
    with open("scaling_trend_evaluation.json", "w") as f:
        json.dump(results, f, indent=2)
