# Core config, errors, logging and integrity
