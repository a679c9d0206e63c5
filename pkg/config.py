from fractions import Fraction


class Config:
    # Mixing chain
    P_IDENTITY = Fraction(1, 2)
    DEFAULT_STEPS = 10_000
    DEFAULT_REPLICAS = 1
    DEFAULT_SEED = 0
    DRAW_BATCH = 4096  # op draws generated per numpy call
    BATCH_MEANS = 20  # batches for the per-replica standard error
    SPREAD_TOLERANCE = 3.0  # replica spread vs pooled standard error before warning

    # Oracles
    CLASS_SIZE_BOUND = 10**6
    MATRIX_SIZE_BOUND = 10**4
    ENUMERATION_LOG_EVERY = 100_000

    # Predictor
    HEIGHT_CAP_FACTOR = 64
    DEFAULT_SAMPLES = 100_000

    # Reports
    CSV_HEADER = ("m", "t", "replica", "schema", "phi_hat", "predicted", "abs_error", "seed")
    REPORT_FORMATS = ("csv", "json")

    # Logging
    LOG_LEVEL = "INFO"
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
