DEFAULT_ENUMERATION_BUDGET = 200_000
DEFAULT_COMPLEX_BUDGET = 200_000
DEFAULT_SAMPLE_SIZE = 10_000
DEFAULT_SEED = 0xC0FFEE
EXHAUSTIVE_FACE_LIMIT = 64
PARANOID_GROUND_SET_LIMIT = 8
BASIS_EXCHANGE_GROUND_SET_LIMIT = 12
RANK_AXIOM_SAMPLES = 200
CERTIFICATION_ATTEMPTS = 3
CERTIFICATION_PRIME_BITS = 61
RANDOM_PRIME_BITS = 30

THREADS_ENV_VAR = "CBPD_THREADS"
COMPLEX_BUDGET_ENV_VAR = "CBPD_COMPLEX_BUDGET"
