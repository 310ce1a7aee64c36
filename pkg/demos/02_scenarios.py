"""Building the continual-learning streams.

Shows the three stream shapes: class-incremental splits (including the
base-50 variant), domain-incremental sequences, and the Gaussian-scheduled
task-free stream.
"""

import numpy as np

from cleval import (
    build_class_incremental,
    build_domain_incremental,
    build_gaussian_schedule,
    seen_classes,
)

# --- class-incremental: 100 classes over 10 equal steps ----------------------
ten_steps = build_class_incremental(100, base_classes=10, increment=10, class_order_seed=7)
print(ten_steps.config_name)
print("  step sizes:", [len(t.class_ids) for t in ten_steps.tasks])
print("  seen after step 0:", len(seen_classes(ten_steps, 0)))
print("  seen after step 9:", len(seen_classes(ten_steps, 9)))

# The base-50 variant: half the classes up front, the rest in steps of 5.
b50 = build_class_incremental(100, base_classes=50, increment=5, class_order_seed=7)
print(b50.config_name)
print("  step sizes:", [len(t.class_ids) for t in b50.tasks])

# Same seed, same split; a different seed permutes the class order.
again = build_class_incremental(100, 10, 10, class_order_seed=7)
other = build_class_incremental(100, 10, 10, class_order_seed=8)
print("  deterministic:", again.tasks[0].class_ids == ten_steps.tasks[0].class_ids)
print("  seed-sensitive:", other.tasks[0].class_ids != ten_steps.tasks[0].class_ids)

# --- domain-incremental: same classes, shifting domains ----------------------
domains = build_domain_incremental(10, domain_ids=[0, 1, 2])
print(f"\n{domains.config_name}")
print("  every step sees the full label set:", len(seen_classes(domains, 0)))

# --- task-free: Gaussian arrival schedule over micro-batches -----------------
labels = np.repeat(np.arange(5), 40)  # 5 classes, 40 samples each
stream = build_gaussian_schedule(labels, num_microbatches=10, sigma=1.0, seed=3)
print(f"\n{stream.config_name}")
print("  micro-batch sizes:", [len(t.sample_indices) for t in stream.tasks])
census = sum(len(t.sample_indices) for t in stream.tasks)
print(f"  census: {census} assignments for {len(labels)} samples")

# With a tiny sigma each class collapses onto its mean position.
sharp = build_gaussian_schedule(labels, num_microbatches=10, sigma=1e-9, seed=3)
print("  tiny-sigma batches by class:", [sorted(t.class_ids) for t in sharp.tasks])
