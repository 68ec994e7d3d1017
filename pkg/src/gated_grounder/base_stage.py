"""Base stage class for all pipeline stages."""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict

from gated_grounder.models import StageMessage

logger = logging.getLogger(__name__)


class BaseStage(ABC):
    """Base class for all stages."""

    def __init__(self, name: str):
        """Initialize the stage.

        Args:
            name: Stage name
        """
        self.name = name
        self.tools: Dict[str, Any] = {}

    def register_tool(self, name: str, tool: Any):
        """Register a tool for this stage to use.

        Args:
            name: Tool name
            tool: Tool instance
        """
        self.tools[name] = tool

    def require_tool(self, name: str) -> Any:
        """Registered tool by name.

        Raises:
            ValueError: If the tool was never registered
        """
        if name not in self.tools:
            raise ValueError(f"{self.name} needs the '{name}' tool. Call register_tool() first.")
        return self.tools[name]

    def handle(self, message: StageMessage) -> Dict[str, Any]:
        """Check the addressee, then run process() and log how long it took.

        Raises:
            ValueError: If the message is addressed to another stage
        """
        if message.to_stage != self.name:
            raise ValueError(f"{self.name} received a message for {message.to_stage}")
        logger.debug("%s <- %s (%s)", self.name, message.from_stage, message.phase)
        start = time.perf_counter()
        result = self.process(message)
        logger.info("%s finished %s in %.1fs", self.name, message.phase, time.perf_counter() - start)
        return result

    @abstractmethod
    def process(self, message: StageMessage) -> Dict[str, Any]:
        """Process a message and return results.

        Args:
            message: Incoming stage message

        Returns:
            Dictionary with at least "phase" and "status"
        """
        pass
