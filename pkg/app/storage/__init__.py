# Run files: config TOML, CSV tables, checkpoints, traces
