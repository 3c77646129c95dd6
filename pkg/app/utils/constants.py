import os

CONSOLE_WIDTH = 100

# exit taxonomy shared by every command
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

# FRODTNSR container
CONTAINER_MAGIC = b"FRODTNSR"
CONTAINER_VERSION = 1
CONTAINER_ALIGN = 8
MAX_TENSOR_NAME_BYTES = 255
DTYPES = {"f32": "<f4", "f64": "<f8"}

# decomposition
DEFAULT_PI = 1e-3
DEFAULT_MODE = "blockwise"
DECOMP_MODES = ("blockwise", "literal")
SIGMA_FLOOR = 1e-12
RECON_FAIL_RTOL = 1e-8

# dense kernels
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_RTOL = 1e-14
SYMMETRY_RTOL = 1e-10
SIGN_TIE_RTOL = 1e-9

# analysis
PDOF_RANK_RTOL = 1e-8
MAX_PDOF_DIM = 12
MAX_FD_PARAMS = 200
FD_HESSIAN_STEP = 1e-4
ROTATION_BAND = (0.05, 0.2)
WEYL_SLACK = 1e-9

# training
ACC_EPOCHS = (1, 4, 10)
SCHEMES = ("frod", "sigma-only", "s-only", "lora", "vera", "pissa", "full")
TASK_KINDS = ("blobs", "tiny-attention")
BLOB_RADIUS = 3.0
TRAIN_FRACTION = 0.8

# landscape
DEFAULT_HALF_RANGE = 1.0
DEFAULT_GRID_STEPS = 41

# verify
DEFAULT_VERIFY = {"trials": 1000, "eps": 0.05, "s": 0.1, "seed": 0}

DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_THREADS = os.cpu_count() or 1

THEME = {
    "primary": "#4566db",
    "secondary": "#9c79ee",
    "accent": "#88c5d0",
    "success": "#10b981",
    "warning": "#ebac40",
    "error": "#ef4444",
    "muted": "#6b7280",
    "text": "#f8fafc",
    "border": "#374151",
}
