"""Constants for the anisoperturb laboratory."""

DOMAIN = "anisoperturb"

# spatial dimension of every grid and of the sphere mesh ambient space
DIM = 3

POTENTIAL_LDG = "ldg"
POTENTIAL_GL = "gl"

ELASTIC_LDG = "ldg"
ELASTIC_ISOTROPIC = "isotropic"
ELASTIC_GENERAL = "general"

DOMAIN_BOX = "box"
DOMAIN_BALL = "ball"
DOMAIN_HALF_BALL = "half_ball"

ANCHORING_DIRICHLET = "dirichlet"
ANCHORING_WEAK = "weak"
ANCHORING_FREE = "free"

DATA_HEDGEHOG = "hedgehog"
DATA_UNIFORM = "uniform"
DATA_ROTATING = "rotating"

INIT_DATA = "data"
INIT_RADIAL = "radial"

CONF_MODEL = "model"
CONF_DOMAIN = "domain"
CONF_ANCHORING = "anchoring"
CONF_SOLVER = "solver"
CONF_SWEEP = "sweep"
CONF_DIAGNOSTICS = "diagnostics"
CONF_LUCKHAUS = "luckhaus"
CONF_OUTPUT = "output"

CONF_KIND = "kind"
CONF_POTENTIAL = "potential"
CONF_ELASTIC = "elastic"
CONF_A2 = "a2"
CONF_B2 = "b2"
CONF_C2 = "c2"
CONF_GROWTH_P = "growth_p"
CONF_GROWTH_A = "growth_a"
CONF_L = "L"
CONF_SCALE = "scale"
CONF_COEFFICIENTS = "coefficients"
CONF_N = "n"
CONF_H = "h"
CONF_RADIUS = "radius"
CONF_DATA = "data"
CONF_DIRECTOR = "director"
CONF_KAPPA = "kappa"
CONF_STRENGTH = "strength"
CONF_INIT = "init"
CONF_EPSILON = "epsilon"
CONF_MAX_ITERS = "max_iters"
CONF_GRAD_TOL = "grad_tol"
CONF_INITIAL_STEP = "initial_step"
CONF_ARMIJO = "armijo"
CONF_SHRINK = "shrink"
CONF_EPSILON0 = "epsilon0"
CONF_RATIO = "ratio"
CONF_COUNT = "count"
CONF_WARM_START = "warm_start"
CONF_CENTERS = "centers"
CONF_RADII = "radii"
CONF_THETA = "theta"
CONF_ALPHA = "alpha"
CONF_DELTA = "delta"
CONF_TAU = "tau"
CONF_EXCLUSION_RADIUS = "exclusion_radius"
CONF_M_BOUND = "m_bound"
CONF_BOUNDARY_POINT = "boundary_point"
CONF_BOUNDARY_RADII = "boundary_radii"
CONF_LEVELS = "levels"
CONF_SAMPLES = "samples"
CONF_LAYERS = "layers"
CONF_DELTA1 = "delta1"
CONF_ETA = "eta"
CONF_EPSILON_FACTOR = "epsilon_factor"
CONF_PERTURBATION = "perturbation"
CONF_NORMAL_PERTURBATION = "normal_perturbation"
CONF_DIRECTORY = "directory"
CONF_VTK = "vtk"
CONF_DETERMINISTIC = "deterministic"
CONF_SEED = "seed"

# tolerances of the vacuum manifold
UNIT_TOL = 1e-10
EIGEN_GAP_TOL = 1e-9
ON_MANIFOLD_TOL = 1e-8
FIBONACCI_GRID_SIZE = 10_000

# growth condition limits
DEFAULT_GROWTH_P = 2.0
DEFAULT_GROWTH_A = 0.75
# shell radii in units of s*
DEFAULT_GROWTH_RADII = (4.0, 8.0, 16.0, 32.0)
MIN_GROWTH_P = 1.5
GROWTH_SLOPE_TOL = 0.1
DEFAULT_SHELL_SAMPLES = 1000

# grids and quadrature
DEFAULT_NODES = 33
DEFAULT_H = 0.0625
MIN_NODES_PER_AXIS = 3
MIN_RADIUS_CELLS = 4
SUBCELL_OFFSETS = (-0.25, 0.25)
VACUUM_ENERGY_TOL = 1e-14

# solver
DEFAULT_MAX_ITERS = 20_000
DEFAULT_GRAD_TOL_FACTOR = 1e-6
DEFAULT_INITIAL_STEP = 1e-3
DEFAULT_ARMIJO = 1e-4
DEFAULT_SHRINK = 0.5
MAX_HALVINGS = 60
DEFAULT_SWEEP_RATIO = 0.5
DEFAULT_SWEEP_COUNT = 4

# diagnostics
BIAXIALITY_DEFECT = 0.9
DEFAULT_DEFECT_FRACTION = 0.25
DEFAULT_THETA = 0.25
DEFAULT_DELTA = 0.1
DEFAULT_M = 2.0
DEFAULT_ALPHA = 0.5
DEFAULT_CAMPANATO_STRIDE = 2
# the Hölder quotient compares pairs of at most this many lattice points
MAX_HOLDER_POINTS = 2048

# luckhaus constructions
MIN_LEVEL = 1
MAX_LEVEL = 6
DEFAULT_DELTA1 = 1e-2
DEFAULT_ETA = 1e-2
DEFAULT_FACE_SAMPLES = 6
DEFAULT_LAYERS = 5
DEFAULT_LEVELS = (2, 3, 4)
DEFAULT_EPSILON_FACTOR = 1.0
DEFAULT_PERTURBATION = 1e-4
DEFAULT_NORMAL_PERTURBATION = 1e-6
# f(u) below the larger of these is roundoff and excluded from the edge potential ratio
EDGE_RATIO_FLOOR = 1e-14
EDGE_RATIO_RELATIVE = 1e-3

# outputs
DEFAULT_OUTPUT_DIR = "output"
DEFAULT_SEED = 0
DEFAULT_TUBE_SAMPLES = 10_000

# snapshot format
SNAPSHOT_MAGIC = b"ANISNAP\x00"
SNAPSHOT_VERSION = 1

# cli exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_DIAGNOSTICS = 4
