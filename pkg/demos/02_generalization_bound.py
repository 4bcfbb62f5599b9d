"""Bound a model's population loss from held-out per-sample losses.

With probability 1 - delta over the training draw, the population loss of
every model in a p-parameter class is at most its training loss plus the
inverse rate at the budget s = (p/n) * log(2/delta), evaluated on held-out
data. Because the inverse rate never exceeds the held-out mean, the bound is
at most twice that mean, and it tightens as the loss distribution
concentrates.
"""

import numpy as np

from ratefn import ModelMeta, from_losses, generalization_bound, summarize

rng = np.random.default_rng(42)

# Held-out losses of a well-calibrated model: tightly concentrated.
smooth = from_losses(rng.gamma(2.0, 0.05, size=400), model_id="concentrated")
# Held-out losses of a model that memorized: mostly tiny, a few huge.
rough_losses = np.concatenate([rng.gamma(0.3, 0.02, size=360), rng.uniform(2, 6, size=40)])
rough = from_losses(rough_losses, model_id="heavy-tailed")

meta = ModelMeta(param_count=1000, train_size=50_000, delta=0.05)

for ds in (smooth, rough):
    report = generalization_bound(ds, meta)
    mean = summarize(ds).empirical_loss
    print(f"model {ds.model_id!r}:")
    print(f"  held-out mean loss    {mean:.4f}")
    print(f"  budget s              {report.s:.6f}  (union-bound form {report.s_union:.6f})")
    print(f"  inverse rate at s     {report.inverse_rate.value:.4f}")
    print(f"  population-loss bound {report.upper_bound:.4f}  (<= 2x mean: {report.upper_bound <= 2 * mean})")
    print()

# The budget grows with the parameter count and shrinks with training size;
# once it passes b_max the inverse rate saturates at mean - min and the
# bound stops growing.
print("sweep of the parameter count (concentrated model):")
for p in (10, 1000, 100_000, 10_000_000):
    report = generalization_bound(smooth, ModelMeta(p, 50_000, 0.05))
    tag = " (saturated)" if report.inverse_rate.saturated else ""
    print(f"  p = {p:>9,}: bound = {report.upper_bound:.4f}{tag}")

# Supplying the actual training loss separates the two roles of the report.
report = generalization_bound(smooth, meta, train_loss=0.02)
print(f"\nwith an interpolating train loss of 0.02: bound = {report.upper_bound:.4f}")
