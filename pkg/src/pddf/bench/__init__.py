"""Benchmark problems, suite runner and profiles."""
