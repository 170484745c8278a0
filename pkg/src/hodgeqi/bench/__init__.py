"""Benchmark harness: built-in fields, sweeps, validation suites, reports and plots."""
