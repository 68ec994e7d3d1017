"""Orchestrator for coordinating stages."""

from gated_grounder.orchestrator.orchestrator import ABLATION_GRID, GroundingOrchestrator

__all__ = ["GroundingOrchestrator", "ABLATION_GRID"]
