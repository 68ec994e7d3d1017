"""Gated Grounder - graph-based referring expression grounding with dynamic gating."""

__version__ = "0.1.0"
