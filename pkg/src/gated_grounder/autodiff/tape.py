"""Reverse-mode differentiation tape.

Every primitive appends a record holding its inputs and a closure mapping
the output gradient to input gradients. Records are appended in evaluation
order, so the tape is topologically sorted by construction and backward is a
single reverse sweep.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gated_grounder.errors import NumericError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Var:
    """A value produced on (or fed into) a tape.

    `index` is None for constants; such values never receive gradients.
    """

    __slots__ = ("value", "tape", "index")

    def __init__(
        self, value: np.ndarray, tape: Optional["Tape"] = None, index: Optional[int] = None
    ):
        self.value = value
        self.tape = tape
        self.index = index

    @property
    def requires_grad(self) -> bool:
        return self.index is not None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        kind = "const" if self.index is None else f"#{self.index}"
        return f"Var({kind}, shape={self.value.shape})"


class Record:
    """One primitive application."""

    __slots__ = ("op", "inputs", "backward", "name")

    def __init__(
        self,
        op: str,
        inputs: Tuple[Var, ...],
        backward: Optional[BackwardFn],
        name: Optional[str] = None,
    ):
        self.op = op
        self.inputs = inputs
        self.backward = backward
        self.name = name


class Tape:
    """Ordered record of primitive operations for one forward pass.

    Args:
        store: Parameter store that `param()` reads leaves from
    """

    def __init__(self, store=None):
        self.store = store
        self.records: List[Record] = []
        self.decisions: List[Tuple[str, np.ndarray]] = []
        self.loss: Optional[Var] = None
        self._leaves: Dict[str, Var] = {}

    def __len__(self) -> int:
        return len(self.records)

    def leaf(self, value: np.ndarray, name: str) -> Var:
        """Named differentiable input; the same name always yields the same Var."""
        if name in self._leaves:
            return self._leaves[name]
        var = Var(value, self, len(self.records))
        self.records.append(Record("param", (), None, name))
        self._leaves[name] = var
        return var

    def param(self, name: str) -> Var:
        """Leaf for a parameter of the attached store."""
        if self.store is None:
            raise ValueError("Tape has no parameter store. Pass one to Tape(store).")
        return self.leaf(self.store[name], name)

    def constant(self, value) -> Var:
        return Var(np.asarray(value, dtype=np.float64), self)

    def record(
        self, op: str, inputs: Sequence[Var], value: np.ndarray, backward: BackwardFn
    ) -> Var:
        """Append a primitive and return its output.

        Raises:
            NumericError: If the output has non-finite entries
        """
        if not np.all(np.isfinite(value)):
            raise NumericError(f"Non-finite value produced by {op}", op=op)
        if not any(v.requires_grad for v in inputs):
            return Var(value, self)
        var = Var(value, self, len(self.records))
        self.records.append(Record(op, tuple(inputs), backward))
        return var

    def freeze(self, label: str, decision: np.ndarray) -> np.ndarray:
        """Log a discrete decision treated as a constant by backward."""
        decision = np.asarray(decision)
        self.decisions.append((label, decision.copy()))
        return decision

    def fingerprint(self) -> Tuple[Tuple[str, bytes], ...]:
        """Identity of every discrete decision taken on this tape."""
        return tuple((label, d.tobytes()) for label, d in self.decisions)

    def mark_loss(self, loss: Var) -> Var:
        if loss.value.shape not in ((), (1,)):
            raise ValueError(f"Loss must be scalar, got shape {loss.value.shape}")
        self.loss = loss
        return loss

    def check_order(self) -> bool:
        """True if every record only consumes earlier records."""
        for i, rec in enumerate(self.records):
            if any(inp.index is not None and inp.index >= i for inp in rec.inputs):
                return False
        return True

    def param_names(self) -> List[str]:
        return list(self._leaves)


def backward(tape: Tape, store=None) -> Dict[str, np.ndarray]:
    """Gradients of `tape.loss` with respect to every named leaf.

    Args:
        tape: Tape with a marked loss
        store: If given, every store tensor gets an entry (zeros when off-path)

    Returns:
        Gradients keyed by parameter name
    """
    if tape.loss is None:
        raise ValueError("Tape has no loss. Call mark_loss() first.")
    grads: List[Optional[np.ndarray]] = [None] * len(tape.records)
    loss = tape.loss
    if loss.index is not None:
        grads[loss.index] = np.ones_like(loss.value)

    for i in range(len(tape.records) - 1, -1, -1):
        g = grads[i]
        rec = tape.records[i]
        if g is None or rec.backward is None:
            continue
        for inp, ig in zip(rec.inputs, rec.backward(g)):
            if inp.index is None or ig is None:
                continue
            current = grads[inp.index]
            grads[inp.index] = np.array(ig, dtype=np.float64) if current is None else current + ig

    result: Dict[str, np.ndarray] = {}
    if store is not None:
        result.update({name: np.zeros_like(value) for name, value in store.items()})
    for name, var in tape._leaves.items():
        g = grads[var.index]
        result[name] = np.zeros_like(var.value) if g is None else g.reshape(var.value.shape)
    return result
