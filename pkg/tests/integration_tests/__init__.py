"""Integration tests for PACT."""
