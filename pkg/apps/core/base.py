"""
Shared plumbing of the management commands.
"""

import logging
from pathlib import Path

from django.core.management.base import BaseCommand
from django.utils import timezone

from .config import load_run_config
from .signals import command_completed

logger = logging.getLogger(__name__)


class RunCommand(BaseCommand):
    """A command driven by a run configuration file."""

    def add_arguments(self, parser):
        parser.add_argument("--config", help="run configuration JSON (default: published set-up)")
        parser.add_argument("--output-dir", help="directory for output files")

    def load(self, options):
        self.started_at = timezone.now()
        config = load_run_config(options.get("config"))
        return config

    def output_dir(self, config, options):
        directory = Path(options.get("output_dir") or config.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    def finish(self, command, config, output_dir, outputs, rng_seed=None):
        """Announce completion so the run manifest gets written."""
        command_completed.send(
            sender=self.__class__,
            command=command,
            config_hash=config.config_hash,
            rng_seed=rng_seed,
            started_at=self.started_at.isoformat(),
            finished_at=timezone.now().isoformat(),
            outputs=list(outputs),
            output_dir=output_dir,
        )
        for path in outputs:
            self.stdout.write(str(path))
