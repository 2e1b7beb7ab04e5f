"""Unit tests for PACT utility modules."""
