from django.dispatch import Signal

# Sent by a management command once all its outputs are written.
# kwargs: command, config_hash, rng_seed, started_at, finished_at,
# outputs (list of paths), output_dir
command_completed = Signal()
