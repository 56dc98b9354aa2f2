"""Protocol-driven web content mining for evidence-based software engineering reviews."""

__version__ = "0.1.0"
