"""
Application constants and configuration defaults
"""

# Application info
APP_NAME = "edc-classifier"
APP_VERSION = "1.0.0"

# Serialization formats
EQUATION_FORMAT_VERSION = 1
MODEL_FORMAT_VERSION = 1

# Search defaults
DEFAULT_BEAM_WIDTH = 10
DEFAULT_MAX_DEPTH = 3
DEFAULT_RESTARTS = 3
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1

# SGD defaults
DEFAULT_SGD_LEARNING_RATE = 10.0
DEFAULT_SGD_FINAL_LR_FRACTION = 0.05
DEFAULT_SGD_EPOCHS = 200
DEFAULT_SGD_BATCH_SIZE = 32
SGD_MAX_DIVERGENCE_RESTARTS = 5

# Hill climber defaults
DEFAULT_HILL_BUDGET = 2000
DEFAULT_HILL_FRACTION = 0.2
DEFAULT_HILL_TOP_K = 5
DEFAULT_HILL_STEP = 0.05
DEFAULT_INIT_RANGE = 1.0

# Numeric guards
SIGMOID_CLAMP = 35.0
PROB_EPS = 1e-12
EXP_ARG_CLAMP = 700.0

# Display
DEFAULT_PRECISION = 2

# Data ingestion
DEFAULT_DELIMITER = ","
MISSING_MARKERS = ("", "?")
DEFAULT_RARE_THRESHOLD = 0.02
OTHER_CATEGORY = "OTHER"
MISSING_CATEGORY = "missing"
CATEGORY_ESCAPE = "_"
DEFAULT_FOLDS = 10

# Synthetic data
DEFAULT_N_POINTS = 2000
DEFAULT_DOMAIN = ((-10.0, 10.0), (-10.0, 10.0))
DEFAULT_NOISE_SIGMA = 2.0
DEFAULT_CONSTANT_RANGE = 3.0
MIN_ABS_CONSTANT = 0.1
MIN_CLASS_BALANCE = 0.05
MAX_CLASS_BALANCE = 0.95
MAX_GENERATION_ATTEMPTS = 50
N_CLUSTERS = 6
N_POSITIVE_CLUSTERS = 2
CLUSTER_SCALE_RANGE = (0.5, 2.5)
POWER_DEGREES = (3, 4)
DEFAULT_GRID_RESOLUTION = 200


# Summand kinds
class SummandKind:
    LINEAR = "linear"
    PRODUCT = "product"
    EXP = "exp"
    POWER = "power"


# Canonical ordering of summand kinds inside an equation
KIND_RANK = {
    SummandKind.LINEAR: 0,
    SummandKind.PRODUCT: 1,
    SummandKind.EXP: 2,
    SummandKind.POWER: 3,
}

# Number of constants each summand kind carries
KIND_CONSTANTS = {
    SummandKind.LINEAR: 1,
    SummandKind.PRODUCT: 1,
    SummandKind.EXP: 2,
    SummandKind.POWER: 1,
}

SEARCH_KINDS = (SummandKind.LINEAR, SummandKind.PRODUCT, SummandKind.EXP)


# Optimizer names recorded on fit results
class OptimizerName:
    SGD = "sgd"
    HILL = "hill"


# Synthetic protocols
class Protocol:
    WITHIN = "within"
    WITHIN_NOISE = "within-noise"
    BEYOND_NOISE = "beyond-noise"
    GAUSSIAN = "gaussian"
    XOR = "xor"

    ALL = (WITHIN, WITHIN_NOISE, BEYOND_NOISE, GAUSSIAN, XOR)


# Experiment run status
class RunStatus:
    COMPLETED = "completed"
    FAILED = "failed"


# Process exit codes
class ExitCode:
    OK = 0
    DATA_ERROR = 2
    CONFIG_ERROR = 3
    UNLEARNABLE = 4
    INTERNAL = 5
