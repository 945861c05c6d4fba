"""Fine-tuning of deterministic MLP control policies by direct random search,
with optional mesh-dimension reward shaping, desk-scale environments, and a
Monte-Carlo evaluation harness."""

from .envsim import ENV_NAMES, EnvSpec, EnvStep, make_env
from .evaluation import ComparisonReport, EvalReport, compare, monte_carlo_eval
from .meshdim import (
    DEFAULT_LADDER,
    DimensionEstimate,
    MeshLadder,
    estimate_dimension,
    occupied_cells,
    shaped_return,
)
from .policy import (
    MlpPolicy,
    ObservationNormalizer,
    flatten,
    forward_mla,
    load_checkpoint,
    normalize,
    normalizer_checksum,
    save_checkpoint,
    unflatten,
)
from .pretrain import PretrainConfig, fit_normalizer, pretrain
from .rng import Prng, derive_seed
from .rollout import RolloutResult, evaluate_pairs, run_episode
from .search import (
    LinearSchedule,
    SearchConfig,
    UpdateRecord,
    finetune,
    optimize_objective,
    sample_deltas,
    search_step,
    update_theta,
)

__version__ = "0.1.0"
