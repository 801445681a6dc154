"""Accuracy/runtime comparison against rescaled Gaussian-process baselines.

Runs the random-series regression scenario once at a small budget and prints
mean squared error and wall-clock seconds per method. Increase n and the
budgets to reproduce the headline comparison (see tests/test_acceptance.py).

Run:  python3 demos/03_benchmark_vs_gp.py
"""

import json

from kmpoly import ScenarioSpec, run_benchmark

spec = ScenarioSpec(truth="volterra", n=300, noise_sd=0.1, base_seed=0,
                    grid_size=300, K=8, burnin=300, samples=300)
out = run_benchmark(spec)

print(f"n={spec.n}, budget={out['iteration_budget']}, "
      f"truth terms={out['truth_meta']['truth_terms']}")
print(f"{'method':28s} {'mse':>10s} {'seconds':>9s}")
kmp_t = out["results"]["kmp"]["runtime_s"]
for name, res in out["results"].items():
    extra = ""
    if name != "kmp":
        extra = f"   (kmp is {kmp_t / res['runtime_s']:.2f}x its wall-clock)"
    print(f"{name:28s} {res['mse']:10.2e} {res['runtime_s']:9.2f}{extra}")

print("\nfull result payload keys:", json.dumps(sorted(out), default=str))
