import os

from django.conf import settings

CHIGRID_WORKERS = getattr(
    settings, "CHIGRID_WORKERS", int(os.environ.get("CHIGRID_WORKERS", "1"))
)

# Relative negative eigenvalue mass tolerated in a circulant embedding
CHIGRID_EMBEDDING_TOLERANCE = getattr(settings, "CHIGRID_EMBEDDING_TOLERANCE", 1e-8)
CHIGRID_EMBEDDING_DOUBLINGS = getattr(settings, "CHIGRID_EMBEDDING_DOUBLINGS", 3)

CHIGRID_REPLICATION_CHUNK = getattr(settings, "CHIGRID_REPLICATION_CHUNK", 50)
CHIGRID_CONSTANTS_REPLICATIONS = getattr(
    settings, "CHIGRID_CONSTANTS_REPLICATIONS", 2000
)
CHIGRID_QUADRATURE_TOLERANCE = getattr(settings, "CHIGRID_QUADRATURE_TOLERANCE", 1e-10)

CHIGRID_EXPERIMENT_TIME_LIMIT = getattr(
    settings,
    "CHIGRID_EXPERIMENT_TIME_LIMIT",
    60 * 60,  # 1 hour
)
