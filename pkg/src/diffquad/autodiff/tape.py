"""Reverse-mode autodiff tape over scalars and small dense arrays.

A Tape records elementary operations as they execute; each node caches its
primal value, the indices of its operand nodes, and a vector-Jacobian
closure. Calling backward() on a scalar output sweeps the node list once in
reverse and returns adjoints for every leaf. Plain numpy arrays mixed into
an expression act as constants and are never recorded.

One tape belongs to one rollout worker; tapes are cheap to build and are
discarded after backward.
"""

from __future__ import annotations

import numpy as np


class TapeError(Exception):
    pass


class Node:
    """One recorded elementary operation."""

    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents, vjp):
        self.value = value
        self.parents = parents  # tuple of node indices, already on this tape
        self.vjp = vjp          # adjoint -> tuple of parent adjoints; None for leaves


class Var:
    """Handle to one tape node: a differentiable scalar or dense array.

    Vars are immutable and valid only for the tape that created them.
    Arithmetic operators dispatch through diffquad.autodiff.ops so mixed
    Var/ndarray expressions record correctly.
    """

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape, index, value):
        self.tape = tape
        self.index = index
        self.value = value

    @property
    def shape(self):
        return np.shape(self.value)

    def detach(self):
        return self.value

    def __repr__(self):
        return f"Var(idx={self.index}, value={self.value!r})"

    # operator sugar; implementations live in ops.py to avoid import cycles
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)


class Tape:
    """Arena of recorded nodes, topologically ordered by construction."""

    __slots__ = ("nodes", "leaf_indices")

    def __init__(self):
        self.nodes: list[Node] = []
        self.leaf_indices: list[int] = []

    def __len__(self):
        return len(self.nodes)

    def leaf(self, value) -> Var:
        """Register an input the caller wants gradients for."""
        value = np.asarray(value, dtype=np.float64) if not isinstance(value, np.ndarray) else value
        idx = len(self.nodes)
        self.nodes.append(Node(value, (), None))
        self.leaf_indices.append(idx)
        return Var(self, idx, value)

    def record(self, value, parents, vjp) -> Var:
        """Append one op node. parents: tuple of Vars on this tape.

        Same-tape membership is validated where operands meet (the ops
        layer); record itself trusts its parents for speed.
        """
        nodes = self.nodes
        idx = len(nodes)
        nodes.append(Node(value, tuple(p.index for p in parents), vjp))
        return Var(self, idx, value)

    def backward(self, output: Var) -> dict[int, np.ndarray]:
        """Reverse sweep from a scalar output.

        Returns {leaf node index -> adjoint}; leaves not reachable from the
        output get a zero adjoint of the leaf's shape. Visits each node at
        most once (O(N)).
        """
        if output.tape is not self:
            raise TapeError("output does not belong to this tape")
        out_val = output.value
        if np.ndim(out_val) != 0 and np.size(out_val) != 1:
            raise TapeError(f"backward requires a scalar output, got shape {np.shape(out_val)}")

        nodes = self.nodes
        adjoints: list = [None] * (output.index + 1)
        adjoints[output.index] = np.ones_like(out_val, dtype=np.asarray(out_val).dtype)
        for i in range(output.index, -1, -1):
            a = adjoints[i]
            if a is None:
                continue
            node = nodes[i]
            if node.vjp is None:
                continue
            grads = node.vjp(a)
            for pidx, g in zip(node.parents, grads):
                if g is None:
                    continue
                cur = adjoints[pidx]
                # never accumulate in place: grads may alias upstream buffers
                adjoints[pidx] = g if cur is None else cur + g

        result = {}
        for li in self.leaf_indices:
            if li <= output.index and adjoints[li] is not None:
                result[li] = adjoints[li]
            else:
                result[li] = np.zeros_like(nodes[li].value)
        return result

    def grad(self, output: Var, wrt) -> list[np.ndarray]:
        """Convenience: adjoints for an ordered list of leaf Vars."""
        table = self.backward(output)
        out = []
        for v in wrt:
            if v.tape is not self:
                raise TapeError("cross-tape operand")
            if v.index not in table:
                raise TapeError("grad target is not a leaf of this tape")
            out.append(table[v.index])
        return out
