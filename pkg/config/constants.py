VERSION = "1.0.0"

# Channel roles carried in the raster container header
ROLE_SEGMENTATION = "segmentation"
ROLE_CENTROID = "centroid"
ROLE_HYBRID = "hybrid"
ROLE_IMAGE_BAND = "image-band"
ROLE_OTHER = "other"
CHANNEL_ROLES = (ROLE_SEGMENTATION, ROLE_CENTROID, ROLE_HYBRID, ROLE_IMAGE_BAND, ROLE_OTHER)
STACK_ROLES = [ROLE_SEGMENTATION, ROLE_CENTROID, ROLE_HYBRID]

# Fixed channel order of target and prediction stacks
SEGMENTATION_CHANNEL = 0
CENTROID_CHANNEL = 1
HYBRID_CHANNEL = 2

RASTER_DTYPE = "f32le"
BOUNDARY_VALUE = -1.0
DEFAULT_CONNECTIVITY = 8

# Targets
DEFAULT_HEATMAP_SIGMA = 3.0
HEATMAP_TRUNCATE = 4.0

# Loss defaults
DEFAULT_LAMBDA_DICE = 1.0
DEFAULT_LAMBDA_CENTROID = 1.0
DEFAULT_LAMBDA_HYBRID = 1.0
DEFAULT_LAMBDA_SDT = 1.0
DEFAULT_LAMBDA_BOUNDARY = 10.0
DICE_SMOOTHING = 1.0
SMOOTH_L1_DELTA = 1.0

# Postprocess defaults
DEFAULT_SEG_THRESHOLD = 0.5
DEFAULT_MIN_AREA = 16
DEFAULT_BOUNDARY_THRESHOLD = -0.5
DEFAULT_BOUNDARY_PRESENCE_FRACTION = 0.05
DEFAULT_SMOOTH_SIGMA = 2.0
DEFAULT_PEAK_MIN_DISTANCE = 5
DEFAULT_PEAK_MIN_INTENSITY = 0.1
DEFAULT_TILE_SIZE = 1024
DEFAULT_TILE_HALO = 128
PEAK_METRIC_EUCLIDEAN = "euclidean"
PEAK_METRIC_CHEBYSHEV = "chebyshev"
PEAK_METRICS = (PEAK_METRIC_EUCLIDEAN, PEAK_METRIC_CHEBYSHEV)

# Pipeline stage flags
STAGE_FILTERING = "filtering"
STAGE_HYBRID_FILTERING = "hybrid_filtering"
STAGE_WATERSHED = "watershed"
STAGE_FLAGS = (STAGE_FILTERING, STAGE_HYBRID_FILTERING, STAGE_WATERSHED)

# Stage choice constants (ablation rows)
RAW_SEGMENTS = "raw"
SEGMENT_FILTERING = "filter"
WATERSHED_SEGMENTATION = "watershed"
FINAL_SEGMENTATION = "final"
STAGE_CHOICES = (RAW_SEGMENTS, SEGMENT_FILTERING, WATERSHED_SEGMENTATION, FINAL_SEGMENTATION)
STAGE_TITLES = {
    RAW_SEGMENTS: "Raw Segments",
    SEGMENT_FILTERING: "Segment Filtering",
    WATERSHED_SEGMENTATION: "Watershed Segmentation",
    FINAL_SEGMENTATION: "Final Segmentation",
}

VECTORIZE_CONTOUR = "contour"
VECTORIZE_ELLIPSE = "ellipse"
VECTORIZE_MODES = (VECTORIZE_CONTOUR, VECTORIZE_ELLIPSE)

# Metrics
DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_N_BOOT = 10_000
EXACT_PERMUTATION_LIMIT = 12
CONFIDENCE_LEVEL = 0.95

# Splitter
TRAIN = "train"
VALIDATION = "validation"
TEST = "test"
PARTITIONS = (TRAIN, VALIDATION, TEST)
DEFAULT_RATIOS = (0.7, 0.2, 0.1)
DEFAULT_BIN_SIZE = 1000.0
DEFAULT_PATCH_SIZE = 256
DEFAULT_OVERLAP_FRACTION = 0.5

# Synth
DEFAULT_DENSITY = 2.0  # trees per hectare
ABLATION_DENSITY = 8.0  # trees per hectare of the in-memory ablation corpora
DEFAULT_PIXEL_SIZE = 0.25
DEFAULT_CROWN_RADIUS_RANGE = (6.0, 12.0)
PLACEMENT_RETRIES = 200
CROWN_GAP_PX = 6.0
# Centre distance of an overlapping crown from its neighbour, as a fraction of the summed radii
OVERLAP_DISTANCE_RANGE = (0.5, 0.9)
CROWN_VERTICES = 48
CROWN_HARMONICS = (2, 3, 4)
CROWN_HARMONIC_AMPLITUDE = 0.05
CROWN_ASPECT_RANGE = (0.8, 1.0)
SQUARE_METERS_PER_HECTARE = 10_000.0

# CLI
THREADS_ENV_VAR = "DEADWOOD_THREADS"
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 64
