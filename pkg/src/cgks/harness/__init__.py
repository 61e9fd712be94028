"""Configuration, output, run orchestration and command-line interface."""
