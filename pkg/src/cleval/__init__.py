"""Continual-learning evaluation for frozen dual-encoder embeddings.

The package classifies precomputed image embeddings against prompt-derived
text prototypes over class-incremental, domain-incremental, and task-free
streams, and computes the step-wise accuracy and transfer metrics.
"""

from .errors import ClevalError
from .harness import EvalReport, RunConfig, emit_report, load_report, reports_match, run
from .metrics import avg_accuracy, domain_metrics, last_accuracy
from .scenarios import (
    Scenario,
    TaskSpec,
    build_class_incremental,
    build_domain_incremental,
    build_gaussian_schedule,
    load_scenario,
    save_scenario,
    seen_classes,
)
from .store import (
    EmbeddingTable,
    Manifest,
    l2_normalize,
    load_manifest,
    load_table,
    save_manifest,
    save_table,
)
from .zeroshot import (
    ClassifierHead,
    Prediction,
    PromptSet,
    build_head_embedding_pooling,
    build_head_per_prompt,
    evaluate_step,
    load_prompt_set,
    predict,
    predict_decision_pooling,
    render_prompts,
    select_top_k_prompts,
    topk_accuracy,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierHead",
    "ClevalError",
    "EmbeddingTable",
    "EvalReport",
    "Manifest",
    "Prediction",
    "PromptSet",
    "RunConfig",
    "Scenario",
    "TaskSpec",
    "avg_accuracy",
    "build_class_incremental",
    "build_domain_incremental",
    "build_gaussian_schedule",
    "build_head_embedding_pooling",
    "build_head_per_prompt",
    "domain_metrics",
    "emit_report",
    "evaluate_step",
    "l2_normalize",
    "last_accuracy",
    "load_manifest",
    "load_prompt_set",
    "load_report",
    "load_scenario",
    "load_table",
    "predict",
    "predict_decision_pooling",
    "render_prompts",
    "reports_match",
    "run",
    "save_manifest",
    "save_scenario",
    "save_table",
    "seen_classes",
    "select_top_k_prompts",
    "topk_accuracy",
]
