import os
from dotenv import load_dotenv

load_dotenv()

# App settings
APP_ENV = os.getenv("APP_ENV", "production")  # production or development
RESULTS_DIR = os.getenv("RESULTS_DIR", os.path.join(os.path.dirname(__file__), "..", "results"))
LOG_DIR = os.getenv("LOG_DIR", "logs")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
PROFILE_DIR = os.path.join(os.path.dirname(__file__), "..", "profiles")

# Sweep settings
SWEEP_PARALLELISM = int(os.getenv("SWEEP_PARALLELISM", "1"))
MANIFEST_DB_NAME = "manifest.db"
MANIFEST_JSON_NAME = "manifest.json"
INSTANCE_RETRY_ATTEMPTS = 5  # next seeds tried when an instance has no feasible state

# Optimizer defaults
MAX_EVALS = 300  # objective evaluations, not major iterations
RHO_BEGIN = 0.5  # initial trust radius in radians
RHO_END = 1e-4  # final trust radius / stop tolerance

# In-constraint method
PIC_BOUND = 0.05  # lower bound on the in-constraint probability
ZERO_SUPPORT_SENTINEL_OFFSET = 1.0
# Objective returned when the state has no feasible mass: max(penalized_diag) + offset

# Ansatz settings
QAOA_DEPTH = 1
TWOLOCAL_REPS = 1
QAOA_PHASE = "penalized"  # penalized or plain
INIT_PARAM_LOW = -3.141592653589793  # initial parameters drawn uniformly from [low, high]
INIT_PARAM_HIGH = 3.141592653589793

# Grid search (p=1 QAOA over [0, 2pi) x [0, pi))
GRID_GAMMA = 32
GRID_BETA = 32

# Instance generation
WEIGHT_MEAN = 1.0
WEIGHT_STD = 1e-4  # small spread so the optimum is unique
REGULAR_DEGREE = 3
REGULAR_MAX_TRIES = 1000  # pairing-model attempts before giving up
PORTFOLIO_RISK = 0.5  # q
PORTFOLIO_HORIZON = 252  # random-walk steps per asset
PORTFOLIO_DRIFT_SCALE = 1e-3  # per-step drift spread of the mock price series
PORTFOLIO_VOLATILITY = 0.02  # per-step volatility of the mock price series
PARTITION_OBJECTIVE = "cut"  # cut or same_side

# Server settings (optional HTTP surface)
HOST = os.getenv("HOST", "127.0.0.1")
PORT = int(os.getenv("PORT", "8000"))
