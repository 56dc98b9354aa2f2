"""Resumable, hash-gated orchestration of the review stages."""
