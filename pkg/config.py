import os


def env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


def env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    if value is None:
        return default
    try:
        return float(value)
    except ValueError:
        return default


def env_str(name: str, default: str) -> str:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    return value


# Overrides the run config's xs_library when set.
XS_PATH_OVERRIDE = env_str("MTRBENCH_XS_PATH", "")

# Evaluation worker processes; 0 means one per CPU.
THREADS = env_int("MTRBENCH_THREADS", 0)

OUTPUT_DIR = env_str("MTRBENCH_OUTPUT_DIR", "runs")
LOG_LEVEL = env_str("MTRBENCH_LOG_LEVEL", "INFO")

# Upper bound on tracking events in one particle history.
MAX_EVENTS_PER_HISTORY = env_int("MTRBENCH_MAX_EVENTS", 200000)

# Layers thinner than this in sigma_t are streamed without sampling collisions.
VOID_SIGMA_T = env_float("MTRBENCH_VOID_SIGMA_T", 1e-10)


def default_threads() -> int:
    if THREADS > 0:
        return THREADS
    return os.cpu_count() or 1
