"""Two-hop QA worlds, dataset entropy accounting, and content estimation."""

from .entropy import (
    EntropyReport,
    ModelKind,
    Task,
    attribute_entropy,
    baseline_content,
    dataset_entropy,
    name_selection_entropy,
)
from .estimator import (
    AggregateLoss,
    Branch,
    ContentEstimate,
    EffectiveLoss,
    FactCounts,
    aggregate_losses,
    bits_per_parameter,
    content_estimate,
    effective_loss_recurrent,
    effective_loss_two_function,
)
from .generalization import (
    GeneralizationSignature,
    Inferred,
    PresenceFlags,
    TrainIndex,
    classify_algorithm,
    evaluate_holdouts,
    generalization_gap,
    predict_generalization,
    presence_flags,
    uniform_baselines,
)
from .logs import LossRecord, read_loss_log, validate_loss_log, write_loss_log
from .simulate import (
    ReliabilityProfile,
    allocate_budget,
    generate_loss_log,
    ground_truth_content,
    loss_impact_ratio,
    simulate_two_hop_prob,
)
from .worldgen import (
    HOLDOUT_KINDS,
    Profile,
    QAItem,
    Query,
    QuestionKind,
    SplitSet,
    Vocab,
    World,
    WorldConfig,
    build_splits,
    build_vocab,
    detokenize,
    generate_world,
    load_dataset,
    persist_dataset,
    render_question,
    tokenize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
