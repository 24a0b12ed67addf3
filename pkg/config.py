"""
Configuration settings for the PNES simulator
"""
import os

# Thread count for grid sweeps is read from this environment variable
THREADS_ENV = 'PNES_THREADS'
DEFAULT_THREADS = 4

# Directory configuration
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
OUTPUT_DIR = os.path.join(BASE_DIR, 'output')
LOG_DIR = os.path.join(BASE_DIR, 'logs')
PRESET_DIR = os.path.join(BASE_DIR, 'presets')

# Logging configuration
LOG_LEVEL = 'INFO'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
MAIN_LOG_FILE = os.path.join(LOG_DIR, 'pnes.log')
ERROR_LOG_FILE = os.path.join(LOG_DIR, 'errors.log')
SUMMARY_FILE = os.path.join(LOG_DIR, 'run_summary.json')

# Fock truncation
DEFAULT_SIGNAL_CUTOFF = 10
DEFAULT_ANCILLA_CUTOFF = 3
MAX_DENSITY_DIM = 4096          # largest reduced density matrix we build
GATE_PADDING = 4                # extra photons per mode when exponentiating gate generators
WIGNER_PADDING = 10             # extra photons kept after displacing for parity sums
TMSS_TAIL_TOLERANCE = 1e-8      # discarded TMSS amplitude norm

# Numerical tolerances
NORM_TOLERANCE = 1e-12
TRUNCATION_LOSS_CEILING = 1e-6
ENTROPY_EIGENVALUE_FLOOR = 1e-14
DIAGONAL_SUPPORT_TOLERANCE = 1e-8
ENSEMBLE_RANK_TOLERANCE = 1e-14

# Optimizer defaults
OPTIMIZER_STARTS = 16
OPTIMIZER_MAX_ITERATIONS = 4000
OPTIMIZER_XATOL = 1e-9
OPTIMIZER_FATOL = 1e-12
OPTIMIZER_PENALTY = 1e6
OPTIMIZER_TIE_TOLERANCE = 1e-12

# Bell search boxes (per real parameter) and start points
BELL_SETTING_BOUND = 2.0
BELL_START_RADIUS = 0.5
BELL_SEED_DISPLACEMENTS = [0.05, 0.1, 0.2, 0.35, 0.5, 0.8]

# Experimental regime of the feasibility study
FEASIBILITY_ETA = 0.66
FEASIBILITY_COUPLING = 0.1      # NDPA couplings s_1, s_2 and the tap coupling s
FEASIBILITY_T_SQUARED = 0.99

# Declared figure grids
N1_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]      # |C0|^2
N2_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]      # |C1|^2 and |C2|^2 axes
SQUEEZING_GRID = [round(0.05 * k, 2) for k in range(0, 31)]  # s in [0, 1.5]
BELL_SQUEEZING_GRID = [round(0.1 * k, 1) for k in range(0, 13)]
BS_ERRORS = [-0.01, 0.0, 0.01]

# Record formatting
SIGNIFICANT_DIGITS = 12
