"""Prompt rendering and the two pooling strategies.

Builds a synthetic prompt x class embedding grid, then compares embedding
pooling (average the text embeddings, one prototype per class) against
decision pooling (score per prompt, average the score vectors), and picks
the best prompts on a calibration split.
"""

import numpy as np

from cleval import (
    EmbeddingTable,
    Manifest,
    PromptSet,
    build_head_embedding_pooling,
    build_head_per_prompt,
    evaluate_step,
    l2_normalize,
    predict,
    predict_decision_pooling,
    render_prompts,
    select_top_k_prompts,
)

rng = np.random.default_rng(1)

# --- rendering ----------------------------------------------------------------
prompts = PromptSet(
    templates=("a photo of a {}.", "a bad photo of a {}.", "a sketch of a {}."),
    class_names=("otter", "maple", "rocket"),
)
print("rendered prompt grid (template-major):")
for line in render_prompts(prompts):
    print("  ", line)

# --- synthetic text embeddings for the grid ------------------------------------
num_prompts, num_classes, dim = 3, 3, 32
class_direction = rng.normal(size=(num_classes, dim))
prompt_jitter = 0.3 * rng.normal(size=(num_prompts, num_classes, dim))
grid_rows = (class_direction[None] + prompt_jitter).reshape(-1, dim)
text = l2_normalize(EmbeddingTable(data=grid_rows.astype(np.float32)))
manifest = Manifest(
    class_names=list(prompts.class_names),
    source_model="demo",
    prompt_ids=[(p, c) for p in range(num_prompts) for c in range(num_classes)],
)

pooled = build_head_embedding_pooling(text, manifest)
per_prompt = build_head_per_prompt(text, manifest)
print(f"\npooled head:     {pooled.prototypes.shape} (classes x dim)")
print(f"per-prompt head: {per_prompt.prototypes.shape} (prompts x classes x dim)")

# --- one query, both strategies -------------------------------------------------
query = class_direction[1] + 0.4 * rng.normal(size=dim)
a = predict(pooled, query)
b = predict_decision_pooling(per_prompt, query)
print("\nquery drawn near class 1:")
print("  embedding pooling:", np.round(a.probabilities, 3), "->", a.argmax_class)
print("  decision pooling: ", np.round(b.probabilities, 3), "->", b.argmax_class)

# --- top-k prompt selection on a calibration split --------------------------------
calib_rows = np.repeat(class_direction, 30, axis=0) + 0.6 * rng.normal(size=(90, dim))
calibration = l2_normalize(
    EmbeddingTable(
        data=calib_rows.astype(np.float32), labels=np.repeat(np.arange(3), 30)
    )
)
best = select_top_k_prompts(per_prompt, calibration, k=2)
print("\nbest 2 prompts by calibration accuracy:", best)

acc_all, _ = evaluate_step(per_prompt, calibration, seen={0, 1, 2})
acc_best, _ = evaluate_step(per_prompt, calibration, seen={0, 1, 2}, prompt_subset=best)
print(f"calibration accuracy, all prompts: {acc_all:.3f}; top-2 subset: {acc_best:.3f}")
