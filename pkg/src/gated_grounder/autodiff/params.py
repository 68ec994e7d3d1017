"""Named, versioned storage for every trainable tensor."""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from gated_grounder.errors import ConfigurationError, NumericError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ParamSpec:
    """Shape and initialization rule of one tensor.

    `init` is "uniform" (U[-1/sqrt(fan_in), 1/sqrt(fan_in)]), "zeros" or
    "constant" (filled from `fill`).
    """

    shape: Tuple[int, ...]
    fan_in: int = 1
    init: str = "uniform"
    fill: Optional[Tuple[float, ...]] = None


class ParameterStore:
    """Ordered mapping of parameter name -> float64 array.

    Args:
        tensors: Initial tensors (copied)
        version: Update counter, bumped on every optimizer step
    """

    def __init__(self, tensors: Dict[str, np.ndarray], version: int = 0):
        self._tensors: Dict[str, np.ndarray] = {
            name: np.array(value, dtype=np.float64) for name, value in tensors.items()
        }
        self.version = version
        self.schema_version = SCHEMA_VERSION

    @classmethod
    def initialize(cls, specs: Dict[str, ParamSpec], seed: int) -> "ParameterStore":
        """Draw every tensor from its spec, in spec order, from one seeded stream."""
        rng = np.random.default_rng(seed)
        tensors = {}
        for name, spec in specs.items():
            if spec.init == "uniform":
                bound = 1.0 / np.sqrt(spec.fan_in)
                tensors[name] = rng.uniform(-bound, bound, size=spec.shape)
            elif spec.init == "zeros":
                tensors[name] = np.zeros(spec.shape)
            elif spec.init == "constant":
                fill = np.asarray(spec.fill, dtype=np.float64)
                tensors[name] = np.broadcast_to(fill, spec.shape).copy()
            else:
                raise ConfigurationError(f"Unknown init rule '{spec.init}' for {name}")
        return cls(tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def names(self) -> List[str]:
        return list(self._tensors)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: value.shape for name, value in self._tensors.items()}

    def num_parameters(self) -> int:
        return int(sum(value.size for value in self._tensors.values()))

    def assign(self, name: str, value: np.ndarray) -> None:
        """Overwrite a tensor in place; the shape may not change."""
        value = np.asarray(value, dtype=np.float64)
        current = self._tensors[name]
        if value.shape != current.shape:
            raise ConfigurationError(f"Shape mismatch for {name}: {value.shape} != {current.shape}")
        if not np.all(np.isfinite(value)):
            raise NumericError(f"Non-finite values assigned to {name}", op="assign")
        current[...] = value

    def check_specs(self, specs: Dict[str, ParamSpec]) -> None:
        """Verify names and shapes against the expected specs."""
        expected = {name: spec.shape for name, spec in specs.items()}
        actual = self.shapes()
        if set(expected) != set(actual):
            missing = sorted(set(expected) - set(actual))
            extra = sorted(set(actual) - set(expected))
            raise ConfigurationError(f"Parameter names differ: missing={missing} extra={extra}")
        for name, shape in expected.items():
            if tuple(shape) != tuple(actual[name]):
                raise ConfigurationError(f"Shape mismatch for {name}: {actual[name]} != {shape}")
