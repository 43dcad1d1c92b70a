"""Dense-tensor algebra with tape-based reverse-mode differentiation.

Values are immutable 2-D float64 matrices living on a `Tape`; every exposed
operation records an entry so the tape can be replayed bit-exactly and walked
backwards in exact reverse order. Trainable weights live in a
`ParameterStore` and enter a tape as cached leaf values.

Everything runs in double precision with a fixed summation order so gradient
checks are tight and regression tests can assert bit-equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels as K

OPCODE_NAMES = K.OPCODE_NAMES


class ShapeError(ValueError):
    """Operands with incompatible shapes; the message names both."""


class DomainError(ValueError):
    """Input outside an operation's domain (e.g. empty tensor)."""


class ContractError(ValueError):
    """An API contract was violated (e.g. non-scalar loss)."""


def as_matrix(data) -> np.ndarray:
    """Coerce to a C-contiguous float64 matrix; 1-D input becomes one row."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={arr.ndim}")
    return np.ascontiguousarray(arr)


class Tensor:
    """Handle to one immutable value on a tape."""

    __slots__ = ("tape", "vid")

    def __init__(self, tape: "Tape", vid: int):
        self.tape = tape
        self.vid = vid

    @property
    def data(self) -> np.ndarray:
        return self.tape.values[self.vid]

    @property
    def shape(self) -> tuple[int, int]:
        return self.tape.values[self.vid].shape

    def item(self) -> float:
        return float(self.tape.values[self.vid][0, 0])

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return add(self, scale_const(other, -1.0))

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, vid={self.vid})"


class Tape:
    """Recorded forward computation: values, ops and parameter leaves."""

    def __init__(self):
        self.values: list[np.ndarray] = []
        self.needs: list[bool] = []
        self.ops: list[tuple[int, int, tuple[int, ...], object]] = []
        self.param_leaves: list[tuple[int, str]] = []
        self._param_cache: dict[str, Tensor] = {}

    def _alloc(self, arr: np.ndarray, needs: bool) -> Tensor:
        self.values.append(arr)
        self.needs.append(needs)
        return Tensor(self, len(self.values) - 1)

    def constant(self, data) -> Tensor:
        """A non-trainable input value (no gradient flows into it)."""
        return self._alloc(as_matrix(data), False)

    def variable(self, data) -> Tensor:
        """A differentiable leaf that is not store-managed (tests)."""
        return self._alloc(as_matrix(data), True)

    def record(self, opcode: int, out: np.ndarray, ins: tuple[Tensor, ...],
               aux=None) -> Tensor:
        needs = any(t.tape.needs[t.vid] for t in ins)
        res = self._alloc(out, needs)
        self.ops.append((opcode, res.vid, tuple(t.vid for t in ins), aux))
        return res

    def replay(self) -> list[np.ndarray]:
        """Re-execute every recorded op from the current leaf values.

        Returns a full values list; with untouched leaves it must equal the
        recorded values bit-for-bit.
        """
        vals = [v for v in self.values]
        for opcode, out, ins, aux in self.ops:
            vals[out] = _apply_forward(opcode, [vals[i] for i in ins], aux)
        return vals


def _apply_forward(opcode: int, ins: list[np.ndarray], aux) -> np.ndarray:
    if opcode == K.MATMUL:
        return K.f_matmul(*ins)
    if opcode == K.TRANSPOSE:
        return K.f_transpose(*ins)
    if opcode == K.ADD:
        return K.f_add(*ins)
    if opcode == K.ADD_ROWVEC:
        return K.f_add_rowvec(*ins)
    if opcode == K.MUL:
        return K.f_mul(*ins)
    if opcode == K.MUL_COLVEC:
        return K.f_mul_colvec(*ins)
    if opcode == K.SCALE_TENSOR:
        return K.f_scale_tensor(*ins)
    if opcode == K.SCALE_CONST:
        return K.f_scale_const(ins[0], aux)
    if opcode == K.RELU:
        return K.f_relu(*ins)
    if opcode == K.TANH:
        return K.f_tanh(*ins)
    if opcode == K.SOFTMAX_G:
        return K.f_softmax_global(*ins)
    if opcode == K.SOFTMAX_R:
        return K.f_softmax_rows(*ins)
    if opcode == K.CONCAT_COLS:
        return K.f_concat_cols(*ins)
    if opcode == K.CONCAT_ROWS:
        return K.f_concat_rows(*ins)
    if opcode == K.SUM_ALL:
        return K.f_sum_all(*ins)
    if opcode == K.MEAN_ROWS:
        return K.f_mean_rows(*ins)
    if opcode == K.GATHER_ROWS:
        return K.f_gather_rows(ins[0], aux)
    if opcode == K.PAIR_CONCAT:
        return K.f_pair_concat(*ins)
    if opcode == K.RESHAPE:
        return K.f_reshape(ins[0], aux[0], aux[1])
    if opcode == K.CROSS_ENTROPY:
        return K.f_cross_entropy(ins[0], aux)
    raise AssertionError(f"unknown opcode {opcode}")


class ParameterStore:
    """Named trainable weights plus matching gradient accumulators."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, data) -> np.ndarray:
        if name in self.params:
            raise ContractError(f"duplicate parameter name {name!r}")
        arr = as_matrix(data)
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)
        return arr

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def scale_grads(self, factor: float) -> None:
        for g in self.grads.values():
            g *= factor

    def use(self, tape: Tape, name: str) -> Tensor:
        """Leaf tensor for a parameter; cached per tape so each weight enters
        a forward pass exactly once."""
        cached = tape._param_cache.get(name)
        if cached is not None:
            return cached
        if name not in self.params:
            raise KeyError(f"unknown parameter {name!r}")
        t = tape._alloc(self.params[name], True)
        tape.param_leaves.append((t.vid, name))
        tape._param_cache[name] = t
        return t


# ------------------------------------------------------------ operations

def _same_tape(*ts: Tensor) -> Tape:
    tape = ts[0].tape
    for t in ts[1:]:
        if t.tape is not tape:
            raise ContractError("operands recorded on different tapes")
    return tape


def matmul(a: Tensor, b: Tensor) -> Tensor:
    tape = _same_tape(a, b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return tape.record(K.MATMUL, K.f_matmul(a.data, b.data), (a, b))


def transpose(a: Tensor) -> Tensor:
    return a.tape.record(K.TRANSPOSE, K.f_transpose(a.data), (a,))


def add(a: Tensor, b: Tensor) -> Tensor:
    tape = _same_tape(a, b)
    if a.shape == b.shape:
        return tape.record(K.ADD, K.f_add(a.data, b.data), (a, b))
    if b.shape == (1, a.shape[1]):
        return tape.record(K.ADD_ROWVEC, K.f_add_rowvec(a.data, b.data), (a, b))
    raise ShapeError(f"add: shapes {a.shape} and {b.shape} are incompatible")


def mul(a: Tensor, b: Tensor) -> Tensor:
    tape = _same_tape(a, b)
    if a.shape == b.shape:
        return tape.record(K.MUL, K.f_mul(a.data, b.data), (a, b))
    if b.shape == (a.shape[0], 1):
        return tape.record(K.MUL_COLVEC, K.f_mul_colvec(a.data, b.data), (a, b))
    raise ShapeError(f"mul: shapes {a.shape} and {b.shape} are incompatible")


def scale(s: Tensor, a: Tensor) -> Tensor:
    """Scalar tensor (1x1) times matrix."""
    tape = _same_tape(s, a)
    if s.shape != (1, 1):
        raise ShapeError(f"scale: scalar must be 1x1, got {s.shape}")
    return tape.record(K.SCALE_TENSOR, K.f_scale_tensor(s.data, a.data), (s, a))


def scale_const(a: Tensor, c: float) -> Tensor:
    return a.tape.record(K.SCALE_CONST, K.f_scale_const(a.data, c), (a,), float(c))


def nonlinearity(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return x.tape.record(K.RELU, K.f_relu(x.data), (x,))
    if kind == "tanh":
        return x.tape.record(K.TANH, K.f_tanh(x.data), (x,))
    raise ValueError(f"unknown nonlinearity {kind!r} (expected 'relu' or 'tanh')")


def softmax(x: Tensor, mode: str = "global") -> Tensor:
    if x.data.size == 0:
        raise DomainError("softmax of an empty tensor")
    if mode == "global":
        return x.tape.record(K.SOFTMAX_G, K.f_softmax_global(x.data), (x,))
    if mode == "per-row":
        return x.tape.record(K.SOFTMAX_R, K.f_softmax_rows(x.data), (x,))
    raise ValueError(f"unknown softmax mode {mode!r}")


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Column-wise concatenation [a, b]."""
    tape = _same_tape(a, b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"concat: row counts differ, {a.shape} vs {b.shape}")
    return tape.record(K.CONCAT_COLS, K.f_concat_cols(a.data, b.data), (a, b))


def concat_rows(a: Tensor, b: Tensor) -> Tensor:
    tape = _same_tape(a, b)
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"concat_rows: column counts differ, {a.shape} vs {b.shape}")
    return tape.record(K.CONCAT_ROWS, K.f_concat_rows(a.data, b.data), (a, b))


def stack_rows(tensors: list[Tensor]) -> Tensor:
    out = tensors[0]
    for t in tensors[1:]:
        out = concat_rows(out, t)
    return out


def sum_all(a: Tensor) -> Tensor:
    return a.tape.record(K.SUM_ALL, K.f_sum_all(a.data), (a,))


def mean_rows(a: Tensor) -> Tensor:
    """Column means: RxS -> 1xS."""
    return a.tape.record(K.MEAN_ROWS, K.f_mean_rows(a.data), (a,))


def gather_rows(a: Tensor, indices) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError("gather_rows needs a non-empty 1-D index list")
    if idx.min() < 0 or idx.max() >= a.shape[0]:
        raise DomainError(
            f"gather_rows: index out of range for {a.shape[0]} rows: {idx.tolist()}")
    return a.tape.record(K.GATHER_ROWS, K.f_gather_rows(a.data, idx), (a,), idx)


def pair_concat(a: Tensor) -> Tensor:
    """All ordered row pairs: PxC -> P^2 x 2C, row i*P+j = [a_i, a_j]."""
    return a.tape.record(K.PAIR_CONCAT, K.f_pair_concat(a.data), (a,))


def reshape(a: Tensor, rows: int, cols: int) -> Tensor:
    if rows * cols != a.data.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as ({rows}, {cols})")
    return a.tape.record(K.RESHAPE, K.f_reshape(a.data, rows, cols), (a,),
                         (rows, cols))


def cross_entropy(logits: Tensor, gold: int) -> Tensor:
    """Negative log-softmax-probability of the gold row; logits are Kx1."""
    if logits.shape[1] != 1:
        raise ShapeError(f"cross_entropy wants a column of logits, got {logits.shape}")
    if not 0 <= gold < logits.shape[0]:
        raise DomainError(f"gold index {gold} outside 0..{logits.shape[0] - 1}")
    return logits.tape.record(
        K.CROSS_ENTROPY, K.f_cross_entropy(logits.data, int(gold)), (logits,),
        int(gold))


# ------------------------------------------------------------------ MLPs

@dataclass(frozen=True)
class MlpSpec:
    """Parameter names of an MLP: ((w0, b0), (w1, b1), ...).

    Hidden layers are affine + activation; the final layer is affine only.
    """

    layers: tuple[tuple[str, str], ...]
    activation: str = "relu"


def init_mlp(store: ParameterStore, prefix: str, dims: list[int], rng,
             activation: str = "relu") -> MlpSpec:
    """Register MLP weights `prefix.w{i}` / `prefix.b{i}` for the given dims
    chain (e.g. [d, d, 1] = one hidden layer of width d)."""
    names = []
    for i, (din, dout) in enumerate(zip(dims[:-1], dims[1:])):
        w = f"{prefix}.w{i}"
        b = f"{prefix}.b{i}"
        store.add(w, rng.normal(0.0, 1.0 / np.sqrt(din), size=(din, dout)))
        store.add(b, np.zeros((1, dout)))
        names.append((w, b))
    return MlpSpec(layers=tuple(names), activation=activation)


def mlp_apply(tape: Tape, store: ParameterStore, x: Tensor, spec: MlpSpec) -> Tensor:
    h = x
    last = len(spec.layers) - 1
    for i, (wname, bname) in enumerate(spec.layers):
        h = add(matmul(h, store.use(tape, wname)), store.use(tape, bname))
        if i != last:
            h = nonlinearity(h, spec.activation)
    return h


# -------------------------------------------------------------- backward

def backward(tape: Tape, loss: Tensor, store: ParameterStore) -> None:
    """Accumulate d(loss)/d(param) into `store.grads` for every parameter
    leaf on the tape. Parameters never used on the tape are left untouched
    (i.e. zero gradient after `zero_grads`)."""
    if loss.tape is not tape:
        raise ContractError("loss does not belong to this tape")
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be scalar (1x1), got {loss.shape}")
    grads: list = [None] * len(tape.values)
    grads[loss.vid] = np.ones((1, 1))
    K.run_backward(tape.ops, tape.values, tape.needs, grads)
    for vid, name in tape.param_leaves:
        g = grads[vid]
        if g is not None:
            store.grads[name] += g


def grad_of(tape: Tape, loss: Tensor, target: Tensor) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. one tape value (testing helper)."""
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be scalar (1x1), got {loss.shape}")
    grads: list = [None] * len(tape.values)
    grads[loss.vid] = np.ones((1, 1))
    K.run_backward(tape.ops, tape.values, tape.needs, grads)
    g = grads[target.vid]
    return np.zeros_like(target.data) if g is None else g


# ------------------------------------------------------- gradient checks

def finite_diff_check(build_loss, store: ParameterStore, step: float = 1e-5,
                      max_coords_per_param: int | None = None,
                      rng=None, param_names=None, atol: float = 5e-8) -> float:
    """Compare analytic gradients against central finite differences.

    `build_loss` must deterministically rebuild the forward pass from the
    current store contents and return `(tape, loss)`. Returns the max over
    sampled coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).

    Central differences cannot resolve gradients below ~eps*|loss|/(2*step)
    (~1e-11 here): along directions whose true gradient is exactly zero
    (e.g. shared output biases under softmax shift invariance) they return
    pure rounding noise. Coordinates where both sides are below `atol` are
    therefore counted as agreeing; any genuine gradient is orders of
    magnitude above that resolution floor.
    """
    store.zero_grads()
    tape, loss = build_loss()
    backward(tape, loss, store)
    analytic = {n: g.copy() for n, g in store.grads.items()}

    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for name in (param_names if param_names is not None else store.names()):
        arr = store.params[name]
        coords = [(i, j) for i in range(arr.shape[0]) for j in range(arr.shape[1])]
        if max_coords_per_param is not None and len(coords) > max_coords_per_param:
            picks = rng.choice(len(coords), size=max_coords_per_param, replace=False)
            coords = [coords[int(k)] for k in picks]
        for (i, j) in coords:
            orig = arr[i, j]
            arr[i, j] = orig + step
            up = build_loss()[1].item()
            arr[i, j] = orig - step
            down = build_loss()[1].item()
            arr[i, j] = orig
            numeric = (up - down) / (2.0 * step)
            a = analytic[name][i, j]
            if abs(a) <= atol and abs(numeric) <= atol:
                continue
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if err > worst:
                worst = err
    return worst
