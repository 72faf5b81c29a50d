"""LLM-prompted task-oriented dialogue pipeline and evaluation toolkit."""

__version__ = "0.1.0"
