"""Elementary differentiable operations.

Every function here accepts any mix of Vars and plain numpy values. With at
least one Var argument the result is recorded on that Var's tape; with none,
the computation falls through to plain numpy, so the same model code serves
both differentiable rollouts and fast inference.

Subgradient conventions (deterministic): relu/clamp pass the adjoint through
on the closed active region (boundary included); abs and the L2 norm use
adjoint 0 at the kink; elementwise min/max break ties in favor of the first
operand.
"""

from __future__ import annotations

import numpy as np

from .tape import Tape, TapeError, Var

__all__ = [
    "value", "add", "sub", "mul", "div", "neg", "exp", "log", "sqrt",
    "tanh", "relu", "abs_", "softplus", "sin", "cos", "tan",
    "minimum", "maximum", "clamp",
    "where", "sum_", "mean", "dot", "matvec", "matmul", "norm2", "concat",
    "stack", "col", "cols", "reshape", "polyval2", "atan2", "cross",
    "quat_mul", "quat_rotate", "conv2d", "record_elementary",
]


def value(x):
    """Primal value of a Var, or the input unchanged."""
    return x.value if isinstance(x, Var) else x


def _tape_of(*xs) -> Tape | None:
    tape = None
    for x in xs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise TapeError("cross-tape operands")
    return tape


def _unbroadcast(g, shape):
    """Sum an adjoint over the axes numpy broadcasting introduced."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, ss) in enumerate(zip(g.shape, shape)) if ss == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g if g.shape == shape else g.reshape(shape)


def _parents2(a, b):
    """(parents tuple, flags) for a binary op with possibly-const operands."""
    pa, pb = isinstance(a, Var), isinstance(b, Var)
    parents = tuple(x for x, f in ((a, pa), (b, pb)) if f)
    return parents, pa, pb


# ---------------------------------------------------------------------------
# arithmetic (dispatch inlined: these four dominate recorded-node counts)

def _same_shape(g, shape):
    return g if g.shape == shape else _unbroadcast(g, shape)


def add(a, b):
    ta, tb = isinstance(a, Var), isinstance(b, Var)
    if not (ta or tb):
        return a + b
    if ta and tb:
        if a.tape is not b.tape:
            raise TapeError("cross-tape operands")
        av, bv = a.value, b.value
        out = av + bv
        ash, bsh = np.shape(av), np.shape(bv)
        return a.tape.record(out, (a, b),
                             lambda g: (_same_shape(g, ash), _same_shape(g, bsh)))
    if ta:
        av = a.value
        out = av + b
        ash = np.shape(av)
        return a.tape.record(out, (a,), lambda g: (_same_shape(g, ash),))
    bv = b.value
    out = a + bv
    bsh = np.shape(bv)
    return b.tape.record(out, (b,), lambda g: (_same_shape(g, bsh),))


def sub(a, b):
    ta, tb = isinstance(a, Var), isinstance(b, Var)
    if not (ta or tb):
        return a - b
    if ta and tb:
        if a.tape is not b.tape:
            raise TapeError("cross-tape operands")
        av, bv = a.value, b.value
        out = av - bv
        ash, bsh = np.shape(av), np.shape(bv)
        return a.tape.record(out, (a, b),
                             lambda g: (_same_shape(g, ash), _same_shape(-g, bsh)))
    if ta:
        av = a.value
        out = av - b
        ash = np.shape(av)
        return a.tape.record(out, (a,), lambda g: (_same_shape(g, ash),))
    bv = b.value
    out = a - bv
    bsh = np.shape(bv)
    return b.tape.record(out, (b,), lambda g: (_same_shape(-g, bsh),))


def mul(a, b):
    ta, tb = isinstance(a, Var), isinstance(b, Var)
    if not (ta or tb):
        return a * b
    if ta and tb:
        if a.tape is not b.tape:
            raise TapeError("cross-tape operands")
        av, bv = a.value, b.value
        out = av * bv
        ash, bsh = np.shape(av), np.shape(bv)
        return a.tape.record(out, (a, b),
                             lambda g: (_same_shape(g * bv, ash), _same_shape(g * av, bsh)))
    if ta:
        av = a.value
        out = av * b
        ash = np.shape(av)
        return a.tape.record(out, (a,), lambda g: (_same_shape(g * b, ash),))
    bv = b.value
    out = a * bv
    bsh = np.shape(bv)
    return b.tape.record(out, (b,), lambda g: (_same_shape(g * a, bsh),))


def div(a, b):
    ta, tb = isinstance(a, Var), isinstance(b, Var)
    if not (ta or tb):
        return a / b
    if ta and tb:
        if a.tape is not b.tape:
            raise TapeError("cross-tape operands")
        av, bv = a.value, b.value
        out = av / bv
        ash, bsh = np.shape(av), np.shape(bv)
        return a.tape.record(
            out, (a, b),
            lambda g: (_same_shape(g / bv, ash),
                       _same_shape(-g * av / (bv * bv), bsh)))
    if ta:
        av = a.value
        out = av / b
        ash = np.shape(av)
        return a.tape.record(out, (a,), lambda g: (_same_shape(g / b, ash),))
    bv = b.value
    out = a / bv
    bsh = np.shape(bv)
    return b.tape.record(out, (b,),
                         lambda g: (_same_shape(-g * a / (bv * bv), bsh),))


def neg(a):
    av = value(a)
    out = -av
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (-g,))


# ---------------------------------------------------------------------------
# transcendental / nonlinear

def exp(a):
    out = np.exp(value(a))
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (g * out,))


def log(a):
    av = value(a)
    out = np.log(av)
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (g / av,))


def sqrt(a):
    out = np.sqrt(value(a))
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (g / (2.0 * out),))


def tanh(a):
    out = np.tanh(value(a))
    tape = _tape_of(a)
    if tape is None:
        return out
    return tape.record(out, (a,), lambda g: (g * (1.0 - out * out),))


def relu(a):
    av = value(a)
    out = np.maximum(av, 0.0)
    tape = _tape_of(a)
    if tape is None:
        return out
    mask = av >= 0.0
    return tape.record(out, (a,), lambda g: (g * mask,))


def abs_(a):
    av = value(a)
    out = np.abs(av)
    tape = _tape_of(a)
    if tape is None:
        return out
    sign = np.sign(av)
    return tape.record(out, (a,), lambda g: (g * sign,))


def sin(a):
    av = value(a)
    out = np.sin(av)
    tape = _tape_of(a)
    if tape is None:
        return out
    cos_v = np.cos(av)
    return tape.record(out, (a,), lambda g: (g * cos_v,))


def cos(a):
    av = value(a)
    out = np.cos(av)
    tape = _tape_of(a)
    if tape is None:
        return out
    sin_v = np.sin(av)
    return tape.record(out, (a,), lambda g: (-g * sin_v,))


def tan(a):
    av = value(a)
    out = np.tan(av)
    tape = _tape_of(a)
    if tape is None:
        return out
    sec2 = 1.0 + out * out
    return tape.record(out, (a,), lambda g: (g * sec2,))


def softplus(a):
    """ln(1 + exp(a)), overflow-safe."""
    av = value(a)
    out = np.logaddexp(0.0, av)
    tape = _tape_of(a)
    if tape is None:
        return out
    sig = 1.0 / (1.0 + np.exp(-av))
    return tape.record(out, (a,), lambda g: (g * sig,))


# ---------------------------------------------------------------------------
# piecewise

def minimum(a, b):
    av, bv = value(a), value(b)
    out = np.minimum(av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)
    ash, bsh = np.shape(av), np.shape(bv)
    take_a = av <= bv

    def vjp(g):
        gs = []
        if pa:
            gs.append(_unbroadcast(g * take_a, ash))
        if pb:
            gs.append(_unbroadcast(g * ~take_a, bsh))
        return gs

    return tape.record(out, parents, vjp)


def maximum(a, b):
    av, bv = value(a), value(b)
    out = np.maximum(av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)
    ash, bsh = np.shape(av), np.shape(bv)
    take_a = av >= bv

    def vjp(g):
        gs = []
        if pa:
            gs.append(_unbroadcast(g * take_a, ash))
        if pb:
            gs.append(_unbroadcast(g * ~take_a, bsh))
        return gs

    return tape.record(out, parents, vjp)


def clamp(a, lo, hi):
    """Clip to [lo, hi] with constant bounds; pass-through adjoint inside."""
    av = value(a)
    out = np.clip(av, lo, hi)
    tape = _tape_of(a)
    if tape is None:
        return out
    mask = (av >= lo) & (av <= hi)
    return tape.record(out, (a,), lambda g: (g * mask,))


def where(mask, a, b):
    """Select by a constant boolean mask."""
    av, bv = value(a), value(b)
    out = np.where(mask, av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)
    ash, bsh = np.shape(av), np.shape(bv)

    def vjp(g):
        gs = []
        if pa:
            gs.append(_unbroadcast(g * mask, ash))
        if pb:
            gs.append(_unbroadcast(g * ~np.asarray(mask), bsh))
        return gs

    return tape.record(out, parents, vjp)


# ---------------------------------------------------------------------------
# reductions and linear algebra

def sum_(a, axis=None):
    av = value(a)
    out = np.sum(av, axis=axis)
    tape = _tape_of(a)
    if tape is None:
        return out
    sh = np.shape(av)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, sh).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), sh).copy(),)

    return tape.record(out, (a,), vjp)


def mean(a, axis=None):
    av = value(a)
    n = av.size if axis is None else av.shape[axis]
    return div(sum_(a, axis=axis), float(n))


def dot(a, b):
    """Inner product of two 1-D vectors."""
    av, bv = value(a), value(b)
    out = np.dot(av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)

    def vjp(g):
        gs = []
        if pa:
            gs.append(g * bv)
        if pb:
            gs.append(g * av)
        return gs

    return tape.record(out, parents, vjp)


def matvec(m, v):
    """Matrix (m,n) times vector (n,)."""
    mv, vv = value(m), value(v)
    out = mv @ vv
    tape = _tape_of(m, v)
    if tape is None:
        return out
    parents, pm, pv = _parents2(m, v)

    def vjp(g):
        gs = []
        if pm:
            gs.append(np.outer(g, vv))
        if pv:
            gs.append(mv.T @ g)
        return gs

    return tape.record(out, parents, vjp)


def matmul(a, b):
    """2-D @ 2-D matrix product (covers batched row-stacks)."""
    av, bv = value(a), value(b)
    if av.ndim == 1 and bv.ndim == 1:
        return dot(a, b)
    if av.ndim == 2 and bv.ndim == 1:
        return matvec(a, b)
    out = av @ bv
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)

    def vjp(g):
        gs = []
        if pa:
            gs.append(g @ bv.T)
        if pb:
            gs.append(av.T @ g)
        return gs

    return tape.record(out, parents, vjp)


def norm2(a, axis=None, eps=1e-12):
    """Euclidean norm, reducing over `axis` (all axes if None).

    Adjoint is x/‖x‖ with ‖x‖ floored at eps, hence 0 at the origin.
    """
    av = value(a)
    out = np.sqrt(np.sum(av * av, axis=axis))
    tape = _tape_of(a)
    if tape is None:
        return out
    safe = np.maximum(out, eps)

    def vjp(g):
        if axis is None:
            return (g * av / safe,)
        return (np.expand_dims(g / safe, axis) * av,)

    return tape.record(out, (a,), vjp)


def concat(items, axis=-1):
    """Concatenate Vars and constants along an existing axis."""
    vals = [value(x) for x in items]
    out = np.concatenate(vals, axis=axis)
    tape = _tape_of(*items)
    if tape is None:
        return out
    flags = [isinstance(x, Var) for x in items]
    parents = tuple(x for x, f in zip(items, flags) if f)
    sizes = [v.shape[axis] for v in vals]
    bounds = np.cumsum([0] + sizes)

    def vjp(g):
        pieces = []
        for i, f in enumerate(flags):
            if f:
                sl = [slice(None)] * g.ndim
                sl[axis if axis >= 0 else g.ndim + axis] = slice(bounds[i], bounds[i + 1])
                pieces.append(g[tuple(sl)])
        return pieces

    return tape.record(out, parents, vjp)


def stack(items, axis=0):
    """Stack Vars and constants along a new axis."""
    vals = [value(x) for x in items]
    out = np.stack(vals, axis=axis)
    tape = _tape_of(*items)
    if tape is None:
        return out
    flags = [isinstance(x, Var) for x in items]
    parents = tuple(x for x, f in zip(items, flags) if f)

    def vjp(g):
        slabs = np.moveaxis(g, axis, 0)
        return [slabs[i] for i, f in enumerate(flags) if f]

    return tape.record(out, parents, vjp)


def col(a, i):
    """Single index along the last axis, dimension dropped."""
    av = value(a)
    out = av[..., i]
    tape = _tape_of(a)
    if tape is None:
        return out
    sh = np.shape(av)

    def vjp(g):
        full = np.zeros(sh, dtype=g.dtype)
        full[..., i] = g
        return (full,)

    return tape.record(out, (a,), vjp)


def cols(a, start, stop):
    """Contiguous slice [start:stop] along the last axis."""
    av = value(a)
    out = av[..., start:stop]
    tape = _tape_of(a)
    if tape is None:
        return out
    sh = np.shape(av)

    def vjp(g):
        full = np.zeros(sh, dtype=g.dtype)
        full[..., start:stop] = g
        return (full,)

    return tape.record(out, (a,), vjp)


def reshape(a, shape):
    av = value(a)
    out = av.reshape(shape)
    tape = _tape_of(a)
    if tape is None:
        return out
    orig = np.shape(av)
    return tape.record(out, (a,), lambda g: (g.reshape(orig),))


def polyval2(c2, c1, c0, x):
    """Quadratic c2·x² + c1·x + c0 with constant coefficients."""
    xv = value(x)
    out = (c2 * xv + c1) * xv + c0
    tape = _tape_of(x)
    if tape is None:
        return out
    slope = 2.0 * c2 * xv + c1
    return tape.record(out, (x,), lambda g: (g * slope,))


def atan2(y, x):
    yv, xv = value(y), value(x)
    out = np.arctan2(yv, xv)
    tape = _tape_of(y, x)
    if tape is None:
        return out
    parents, py, px = _parents2(y, x)
    denom = xv * xv + yv * yv

    def vjp(g):
        gs = []
        if py:
            gs.append(g * xv / denom)
        if px:
            gs.append(-g * yv / denom)
        return gs

    return tape.record(out, parents, vjp)


def cross(a, b):
    """Cross product over the last axis (size 3)."""
    av, bv = value(a), value(b)
    out = _cross_raw(av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)

    def vjp(g):
        gs = []
        if pa:
            gs.append(_cross_raw(bv, g))
        if pb:
            gs.append(_cross_raw(g, av))
        return gs

    return tape.record(out, parents, vjp)


def conv2d(x, kernel, bias=None, stride=1):
    """Strided valid convolution: x (B,C,H,W), kernel (O,C,K,K) -> (B,O,H',W').

    Implemented as im2col + matmul; the adjoint scatters patch gradients
    back with add-at (col2im).
    """
    xv, kv = value(x), value(kernel)
    bsz, cin, h, w = xv.shape
    cout, _, k, _ = kv.shape
    windows = np.lib.stride_tricks.sliding_window_view(xv, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]          # (B,C,H',W',K,K)
    hp, wp = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(bsz, hp * wp, cin * k * k)
    kmat = kv.reshape(cout, cin * k * k)
    out = np.einsum("bpc,oc->bop", cols, kmat).reshape(bsz, cout, hp, wp)
    bv = None
    if bias is not None:
        bv = value(bias)
        out = out + bv[None, :, None, None]
    tape = _tape_of(x, kernel, bias)
    if tape is None:
        return out

    parts = [(x, "x"), (kernel, "k")]
    if bias is not None:
        parts.append((bias, "b"))
    parents = tuple(p for p, _ in parts if isinstance(p, Var))
    kinds = [tag for p, tag in parts if isinstance(p, Var)]

    def vjp(g):
        gmat = g.reshape(bsz, cout, hp * wp)
        grads = []
        for tag in kinds:
            if tag == "k":
                gk = np.einsum("bop,bpc->oc", gmat, cols).reshape(cout, cin, k, k)
                grads.append(gk)
            elif tag == "b":
                grads.append(g.sum(axis=(0, 2, 3)))
            else:
                gcols = np.einsum("bop,oc->bpc", gmat, kmat)
                gcols = gcols.reshape(bsz, hp, wp, cin, k, k).transpose(0, 3, 1, 2, 4, 5)
                gx = np.zeros_like(xv)
                for u in range(k):
                    for v_ in range(k):
                        gx[:, :, u:u + hp * stride:stride, v_:v_ + wp * stride:stride] += \
                            gcols[:, :, :, :, u, v_]
                grads.append(gx)
        return grads

    return tape.record(out, parents, vjp)


def _qmul_raw(q1, q2):
    w1, x1, y1, z1 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    w2, x2, y2, z2 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    shape = q1.shape if q1.shape == q2.shape else np.broadcast_shapes(q1.shape, q2.shape)
    out = np.empty(shape)
    out[..., 0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[..., 1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[..., 2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[..., 3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    return out


def _cross_raw(a, b):
    a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2]
    b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a2 * b3 - a3 * b2
    out[..., 1] = a3 * b1 - a1 * b3
    out[..., 2] = a1 * b2 - a2 * b1
    return out


_QCONJ = np.array([1.0, -1.0, -1.0, -1.0])


def quat_mul(a, b):
    """Hamilton product of (..., 4) quaternions, w-first.

    Adjoints use q1⊗q2 = L(q1)q2 = R(q2)q1 with Lᵀ(q) = L(q*) and
    Rᵀ(q) = R(q*), so both backward products reuse the forward kernel.
    """
    av, bv = value(a), value(b)
    out = _qmul_raw(av, bv)
    tape = _tape_of(a, b)
    if tape is None:
        return out
    parents, pa, pb = _parents2(a, b)

    def vjp(g):
        gs = []
        if pa:
            gs.append(_qmul_raw(g, bv * _QCONJ))
        if pb:
            gs.append(_qmul_raw(av * _QCONJ, g))
        return gs

    return tape.record(out, parents, vjp)


def quat_rotate(q, v):
    """Vector part of q ⊗ (0, v) ⊗ q*: rotation for unit q, fused node.

    Exact for arbitrary q (scales by |q|^2), so adjoints follow the product
    rule of the sandwich itself: both backward products reuse the forward
    kernel via Lᵀ(q) = L(q*) and Rᵀ(q) = R(q*).
    """
    qv, vv = value(q), value(v)
    p = np.zeros(np.broadcast_shapes(qv.shape[:-1], vv.shape[:-1]) + (4,))
    p[..., 1:] = vv
    qc = qv * _QCONJ
    out = _qmul_raw(_qmul_raw(qv, p), qc)[..., 1:]
    tape = _tape_of(q, v)
    if tape is None:
        return out
    parents, pq, pv = _parents2(q, v)
    qsh, vsh = qv.shape, vv.shape

    def vjp(g):
        big = np.zeros(g.shape[:-1] + (4,))
        big[..., 1:] = g
        gs = []
        if pq:
            t1 = _qmul_raw(_qmul_raw(big, qv), p)
            t2 = _qmul_raw(_qmul_raw(p, qc), big) * _QCONJ
            gs.append(_unbroadcast(-(t1 + t2), qsh))
        if pv:
            gs.append(_unbroadcast(_qmul_raw(_qmul_raw(qc, big), qv)[..., 1:], vsh))
        return gs

    return tape.record(out, parents, vjp)


# elementary-op registry: name -> callable, for data-driven recording
_ELEMENTARY = {
    "add": add, "sub": sub, "mul": mul, "div": div, "neg": neg,
    "exp": exp, "ln": log, "sqrt": sqrt, "tanh": tanh, "relu": relu,
    "abs": abs_, "min": minimum, "max": maximum, "clamp": clamp,
    "dot": dot, "matvec": matvec, "matmul": matmul, "sum": sum_,
    "norm2": norm2, "elementwise-product": mul, "softplus": softplus,
    "atan2": atan2, "cross": cross, "quat-mul": quat_mul,
    "sin": sin, "cos": cos, "tan": tan,
}


def record_elementary(op: str, *operands, **kwargs):
    """Dispatch an op by name; the string form of the functions above."""
    try:
        fn = _ELEMENTARY[op]
    except KeyError:
        raise ValueError(f"unknown elementary op {op!r}") from None
    return fn(*operands, **kwargs)
