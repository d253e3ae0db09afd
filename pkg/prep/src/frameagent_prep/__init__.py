"""Video-to-bundle preprocessing for the frame selection engine."""

from .errors import PrepError
from .job import PrepJob, PrepResult, run_job

__all__ = ["PrepError", "PrepJob", "PrepResult", "run_job"]
__version__ = "0.1.0"
