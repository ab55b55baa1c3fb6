import logging

from django.dispatch import receiver

import idmodds
from apps.core.signals import command_completed
from .services.writers import write_json

logger = logging.getLogger(__name__)


@receiver(command_completed)
def write_run_manifest(sender, command, config_hash, rng_seed, started_at, finished_at,
                       outputs, output_dir, **kwargs):
    """Record what a command produced next to its outputs."""
    path = write_json(
        f"{output_dir}/{command}_manifest.json",
        {
            "toolkit_version": idmodds.__version__,
            "command": command,
            "config_hash": config_hash,
            "rng_seed": rng_seed,
            "started_at": started_at,
            "finished_at": finished_at,
            "outputs": [str(p) for p in outputs],
        },
    )
    logger.info(f"Run manifest written to {path}")
