"""Adam with bias correction, applied per named tensor."""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from gated_grounder.autodiff.params import ParameterStore
from gated_grounder.config import AdamConfig
from gated_grounder.errors import NumericError


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    store: ParameterStore,
    grads: Dict[str, np.ndarray],
    state: AdamState,
    hyper: AdamConfig,
    learning_rate: Optional[float] = None,
) -> AdamState:
    """Apply one Adam update in place.

    Args:
        store: Parameters to update (single writer)
        grads: Gradients keyed by parameter name; missing names count as zero
        state: Moment estimates, updated in place
        hyper: learning_rate, beta1, beta2, epsilon
        learning_rate: Step size overriding hyper.learning_rate (scheduled runs)

    Returns:
        The updated state

    Raises:
        NumericError: If an update produces non-finite parameters
    """
    lr = hyper.learning_rate if learning_rate is None else learning_rate
    state.t += 1
    correction1 = 1.0 - hyper.beta1**state.t
    correction2 = 1.0 - hyper.beta2**state.t

    for name, value in store.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(value)
        if name not in state.m:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        state.m[name] = hyper.beta1 * state.m[name] + (1.0 - hyper.beta1) * g
        state.v[name] = hyper.beta2 * state.v[name] + (1.0 - hyper.beta2) * (g * g)
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        updated = value - lr * m_hat / (np.sqrt(v_hat) + hyper.epsilon)
        if not np.all(np.isfinite(updated)):
            raise NumericError(f"Adam produced non-finite values for {name}", op="adam_step")
        value[...] = updated

    store.version += 1
    return state
