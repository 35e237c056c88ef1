"""
Configuration Module for the Time-Change Lab
Loads environment variables and provides centralized defaults for every
numerical tolerance, grid and Monte Carlo setting.
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# ================================
# NUMERICAL TOLERANCES
# ================================
RESOLVENT_TOL = float(os.getenv("TCLAB_RESOLVENT_TOL", "1e-10"))
TRACE_TOL = float(os.getenv("TCLAB_TRACE_TOL", "1e-9"))
LAPLACE_TOL = float(os.getenv("TCLAB_LAPLACE_TOL", "1e-6"))
SOLVE_RESIDUAL_TOL = float(os.getenv("TCLAB_SOLVE_RESIDUAL_TOL", "1e-12"))
RANK_TOL = float(os.getenv("TCLAB_RANK_TOL", "1e-9"))
SUPPORT_TOL = float(os.getenv("TCLAB_SUPPORT_TOL", "1e-8"))
MEMBERSHIP_TOL = float(os.getenv("TCLAB_MEMBERSHIP_TOL", "1e-9"))
CMP_TOL = float(os.getenv("TCLAB_CMP_TOL", "1e-10"))

# matrices (exp(tQ), resolvents, exp(tL)) kept per model or family
OPERATOR_CACHE_SIZE = int(os.getenv("TCLAB_OPERATOR_CACHE_SIZE", "256"))

# ================================
# DIFFUSION BACKEND
# ================================
DIFFUSION_GRID_SIZE = int(os.getenv("TCLAB_DIFFUSION_GRID_SIZE", "1000"))
KATO_DECAY_TOL = float(os.getenv("TCLAB_KATO_DECAY_TOL", "1e-3"))
KATO_JUMP_TOL = float(os.getenv("TCLAB_KATO_JUMP_TOL", "0.05"))
SINE_MODES = int(os.getenv("TCLAB_SINE_MODES", "2000"))

# ================================
# TIME AND RATE GRIDS
# ================================
T_MAX = float(os.getenv("TCLAB_T_MAX", "5.0"))
T_POINTS = int(os.getenv("TCLAB_T_POINTS", "50"))
ALPHA_GRID = [float(a) for a in os.getenv("TCLAB_ALPHA_GRID", "0.5,1,2,10").split(",")]
LIMIT_ALPHA_GRID = [10.0 ** k for k in range(0, 7)]
FD_STEP = float(os.getenv("TCLAB_FD_STEP", "1e-4"))
FD_TOL = float(os.getenv("TCLAB_FD_TOL", "1e-6"))
LAPLACE_TAIL = float(os.getenv("TCLAB_LAPLACE_TAIL", "1e-12"))

# ================================
# MONTE CARLO PARAMETERS
# ================================
MC_PATHS = int(os.getenv("TCLAB_MC_PATHS", "100000"))
MC_SEED = int(os.getenv("TCLAB_MC_SEED", "20240607"))
MC_WORKERS = int(os.getenv("TCLAB_MC_WORKERS", "1"))
MC_BATCH_SIZE = int(os.getenv("TCLAB_MC_BATCH_SIZE", "20000"))
MC_Z_GATE = float(os.getenv("TCLAB_MC_Z_GATE", "4.0"))
MC_LIFETIME_CAP = float(os.getenv("TCLAB_MC_LIFETIME_CAP", "1e4"))
MC_MIN_PATHS = 1000

# ================================
# CONVERGENCE EXPERIMENTS
# ================================
N_MIN = int(os.getenv("TCLAB_N_MIN", "2"))
N_MAX = int(os.getenv("TCLAB_N_MAX", "64"))
VERDICT_RATIO = float(os.getenv("TCLAB_VERDICT_RATIO", "0.1"))
VERDICT_TAIL = 3
SLOPE_MIN_POINTS = 4
ZERO_ERROR = float(os.getenv("TCLAB_ZERO_ERROR", "1e-13"))

# ================================
# OUTPUT SETTINGS
# ================================
OUTPUT_DIRECTORY = os.getenv("TCLAB_OUTPUT_DIR", "lab_output")
CSV_FLOAT_FORMAT = "%.12e"

# ================================
# LOGGING CONFIGURATION
# ================================
LOG_LEVEL = os.getenv("TCLAB_LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("TCLAB_LOG_FILE", "logs/tclab.log")

# ================================
# EXIT CODES
# ================================
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_CHECK_FAILED = 3


# ================================
# VALIDATION
# ================================
def validate_config():
    """Validate that the configured defaults are usable."""
    errors = []

    for name, value in [
        ("TCLAB_RESOLVENT_TOL", RESOLVENT_TOL),
        ("TCLAB_TRACE_TOL", TRACE_TOL),
        ("TCLAB_LAPLACE_TOL", LAPLACE_TOL),
        ("TCLAB_KATO_DECAY_TOL", KATO_DECAY_TOL),
        ("TCLAB_FD_STEP", FD_STEP),
    ]:
        if not value > 0:
            errors.append(f"{name} must be positive (got {value})")

    if DIFFUSION_GRID_SIZE < 3:
        errors.append(f"TCLAB_DIFFUSION_GRID_SIZE must be >= 3 (got {DIFFUSION_GRID_SIZE})")

    if MC_PATHS < MC_MIN_PATHS:
        errors.append(f"TCLAB_MC_PATHS must be >= {MC_MIN_PATHS} (got {MC_PATHS})")

    if OPERATOR_CACHE_SIZE < 1:
        errors.append(f"TCLAB_OPERATOR_CACHE_SIZE must be >= 1 (got {OPERATOR_CACHE_SIZE})")

    if MC_WORKERS < 1:
        errors.append(f"TCLAB_MC_WORKERS must be >= 1 (got {MC_WORKERS})")

    if T_POINTS < 2 or T_MAX <= 0:
        errors.append("time grid needs TCLAB_T_MAX > 0 and TCLAB_T_POINTS >= 2")

    if any(a < 0 for a in ALPHA_GRID):
        errors.append("TCLAB_ALPHA_GRID entries must be nonnegative")

    if N_MIN < 1 or N_MAX < N_MIN + 1:
        errors.append(f"need 1 <= TCLAB_N_MIN < TCLAB_N_MAX (got {N_MIN}, {N_MAX})")

    if errors:
        raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

    return True


if __name__ == "__main__":
    try:
        validate_config()
        print("\n" + "=" * 60)
        print("🧪 TIME-CHANGE LAB CONFIGURATION")
        print("=" * 60)

        print("\n📐 TOLERANCES:")
        print(f"  Resolvent identity: {RESOLVENT_TOL:g}")
        print(f"  Trace generator:    {TRACE_TOL:g}")
        print(f"  Laplace residual:   {LAPLACE_TOL:g}")
        print(f"  Kato boundary decay:{KATO_DECAY_TOL:g}")

        print("\n📈 GRIDS:")
        print(f"  Diffusion grid: {DIFFUSION_GRID_SIZE} points")
        print(f"  Time grid:      [0, {T_MAX}] with {T_POINTS} points")
        print(f"  Alpha grid:     {ALPHA_GRID}")

        print("\n🎲 MONTE CARLO:")
        print(f"  Paths: {MC_PATHS}  Seed: {MC_SEED}  Workers: {MC_WORKERS}")
        print(f"  z-gate: {MC_Z_GATE}")

        print("\n🖥️ LOGGING:")
        print(f"  Level: {LOG_LEVEL}  File: {LOG_FILE}")
        print("=" * 60 + "\n")

    except ValueError as e:
        print(f"❌ {e}")
