"""Lookahead-simulation based reduction and inclusion checking for NBA and NFA."""
