"""curriq: adaptive curriculum training engine.

Trains a small dense classifier while streaming per-sample confidence and
certainty statistics through bounded FIFO queues; an adaptive threshold over
those statistics masks suspected inconsistently-labeled samples out of the
loss.
"""

from .data import (Dataset, SplitPlan, SyntheticConfig, batch_iterator, generate_synthetic,
                   group_kfold, load_csv, oversample_minority, save_csv)
from .harness import (AblationResult, ConfigError, ExperimentConfig, FoldOutcome, RunArtifacts,
                      TrainingDiverged, run_ablation, run_cross_validation,
                      standard_benchmark_config, train_one_fold)
from .metrics import (ConfusionCounts, FoldReport, accuracy, aggregate, auc, confusion,
                      evaluate, f1, precision, recall)
from .model import (Mlp, NetworkConfig, SgdOptimizer, backward_masked, forward, init_model,
                    load_checkpoint, poly_lr, save_checkpoint, sgd_step)
from .numerics import cross_entropy, matmul, softmax, softmax_ce_gradient
from .scheduler import (AdaptiveScheduler, BoundedStatQueue, SchedulerConfig, StepDiagnostics,
                        sample_certainty, sample_confidence)

__version__ = "0.1.0"
