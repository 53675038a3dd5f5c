"""Experiment configuration, orchestration, persistence and the command-line interface."""
