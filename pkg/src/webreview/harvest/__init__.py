"""Programmatic searching: engine adapters, URL normalization, polite fetching, text extraction."""
