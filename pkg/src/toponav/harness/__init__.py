"""Scenario files, episode loop, suites and sweeps."""
