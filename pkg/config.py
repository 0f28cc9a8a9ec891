import os
from dotenv import load_dotenv

load_dotenv()


def _flag(name, default="false"):
    return os.getenv(name, default).strip().lower() in {"1", "true", "yes", "on"}


class Config:
    OUTPUT_DIR = os.getenv("EIGENBENCH_OUTPUT_DIR", "out")
    THREADS = int(os.getenv("EIGENBENCH_THREADS", "1"))
    LOG_LEVEL = os.getenv("EIGENBENCH_LOG_LEVEL", "INFO")
    DETERMINISTIC = _flag("EIGENBENCH_DETERMINISTIC")

    # Numerical defaults
    CLUSTER_TOL = float(os.getenv("EIGENBENCH_CLUSTER_TOL", "1e-3"))  # relative gap
    GAP_TOL = float(os.getenv("EIGENBENCH_GAP_TOL", "1e-6"))  # times max(1, lambda)
    FD_STEP = float(os.getenv("EIGENBENCH_FD_STEP", "1e-4"))
    EIGEN_COUNT = int(os.getenv("EIGENBENCH_EIGEN_COUNT", "12"))
