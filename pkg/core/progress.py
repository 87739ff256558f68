from django.conf import settings
from tqdm import tqdm


def progress(iterable, desc: str, total: int | None = None):
    """tqdm bar that honours ``SPLAT_PROGRESS``."""
    return tqdm(iterable, desc=desc, total=total, disable=not getattr(settings, "SPLAT_PROGRESS", True), leave=False)
