"""Pure-numpy compute kernels: the fallback backend.

Every kernel takes and returns C-contiguous float64 matrices and never
aliases its inputs. Backward kernels accumulate (+=) into caller-owned
gradient buffers. `run_backward` drives a whole reversed tape; the compiled
backend provides a drop-in replacement with the same semantics.
"""

import numpy as np

COMPILED = False

# Opcodes shared with the compiled backend (kept in sync by a test).
MATMUL = 0
TRANSPOSE = 1
ADD = 2
ADD_ROWVEC = 3
MUL = 4
MUL_COLVEC = 5
SCALE_TENSOR = 6
SCALE_CONST = 7
RELU = 8
TANH = 9
SOFTMAX_G = 10
SOFTMAX_R = 11
CONCAT_COLS = 12
CONCAT_ROWS = 13
SUM_ALL = 14
MEAN_ROWS = 15
GATHER_ROWS = 16
PAIR_CONCAT = 17
RESHAPE = 18
CROSS_ENTROPY = 19

OPCODE_NAMES = {
    MATMUL: "matmul",
    TRANSPOSE: "transpose",
    ADD: "add",
    ADD_ROWVEC: "add_rowvec",
    MUL: "mul",
    MUL_COLVEC: "mul_colvec",
    SCALE_TENSOR: "scale_tensor",
    SCALE_CONST: "scale_const",
    RELU: "relu",
    TANH: "tanh",
    SOFTMAX_G: "softmax_global",
    SOFTMAX_R: "softmax_rows",
    CONCAT_COLS: "concat_cols",
    CONCAT_ROWS: "concat_rows",
    SUM_ALL: "sum_all",
    MEAN_ROWS: "mean_rows",
    GATHER_ROWS: "gather_rows",
    PAIR_CONCAT: "pair_concat",
    RESHAPE: "reshape",
    CROSS_ENTROPY: "cross_entropy",
}


# ---------------------------------------------------------------- forward

def f_matmul(a, b):
    return a @ b


def f_transpose(a):
    return np.ascontiguousarray(a.T)


def f_add(a, b):
    return a + b


def f_add_rowvec(a, v):
    return a + v


def f_mul(a, b):
    return a * b


def f_mul_colvec(a, v):
    return a * v


def f_scale_tensor(s, a):
    return s[0, 0] * a


def f_scale_const(a, c):
    return c * a


def f_relu(a):
    return np.maximum(a, 0.0)


def f_tanh(a):
    return np.tanh(a)


def f_softmax_global(a):
    e = np.exp(a - a.max())
    return e / e.sum()


def f_softmax_rows(a):
    e = np.exp(a - a.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def f_concat_cols(a, b):
    return np.concatenate([a, b], axis=1)


def f_concat_rows(a, b):
    return np.concatenate([a, b], axis=0)


def f_sum_all(a):
    return np.array([[a.sum()]])


def f_mean_rows(a):
    return a.mean(axis=0, keepdims=True)


def f_gather_rows(a, idx):
    return np.ascontiguousarray(a[idx])


def f_pair_concat(a):
    # Row i*P+j of the output is [a_i, a_j].
    p = a.shape[0]
    left = np.repeat(a, p, axis=0)
    right = np.tile(a, (p, 1))
    return np.concatenate([left, right], axis=1)


def f_reshape(a, rows, cols):
    return a.reshape(rows, cols).copy()


def f_cross_entropy(logits, gold):
    z = logits[:, 0]
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    return np.array([[lse - z[gold]]])


# --------------------------------------------------------------- backward

def b_matmul(go, a, b, ga, gb):
    if ga is not None:
        ga += go @ b.T
    if gb is not None:
        gb += a.T @ go


def b_transpose(go, ga):
    if ga is not None:
        ga += go.T


def b_add(go, ga, gb):
    if ga is not None:
        ga += go
    if gb is not None:
        gb += go


def b_add_rowvec(go, ga, gv):
    if ga is not None:
        ga += go
    if gv is not None:
        gv += go.sum(axis=0, keepdims=True)


def b_mul(go, a, b, ga, gb):
    if ga is not None:
        ga += go * b
    if gb is not None:
        gb += go * a


def b_mul_colvec(go, a, v, ga, gv):
    if ga is not None:
        ga += go * v
    if gv is not None:
        gv += (go * a).sum(axis=1, keepdims=True)


def b_scale_tensor(go, s, a, gs, ga):
    if gs is not None:
        gs[0, 0] += (go * a).sum()
    if ga is not None:
        ga += s[0, 0] * go


def b_scale_const(go, c, ga):
    if ga is not None:
        ga += c * go


def b_relu(go, out, ga):
    if ga is not None:
        ga += go * (out > 0.0)


def b_tanh(go, out, ga):
    if ga is not None:
        ga += go * (1.0 - out * out)


def b_softmax_global(go, out, ga):
    if ga is not None:
        dot = (go * out).sum()
        ga += out * (go - dot)


def b_softmax_rows(go, out, ga):
    if ga is not None:
        dot = (go * out).sum(axis=1, keepdims=True)
        ga += out * (go - dot)


def b_concat_cols(go, split, ga, gb):
    if ga is not None:
        ga += go[:, :split]
    if gb is not None:
        gb += go[:, split:]


def b_concat_rows(go, split, ga, gb):
    if ga is not None:
        ga += go[:split]
    if gb is not None:
        gb += go[split:]


def b_sum_all(go, ga):
    if ga is not None:
        ga += go[0, 0]


def b_mean_rows(go, rows, ga):
    if ga is not None:
        ga += go / rows


def b_gather_rows(go, idx, ga):
    if ga is not None:
        np.add.at(ga, idx, go)


def b_pair_concat(go, p, c, ga):
    if ga is not None:
        cube = go.reshape(p, p, 2 * c)
        ga += cube[:, :, :c].sum(axis=1)
        ga += cube[:, :, c:].sum(axis=0)


def b_reshape(go, rows, cols, ga):
    if ga is not None:
        ga += go.reshape(rows, cols)


def b_cross_entropy(go, logits, gold, ga):
    if ga is not None:
        p = f_softmax_global(logits)
        g = p.copy()
        g[gold, 0] -= 1.0
        ga += go[0, 0] * g


# ----------------------------------------------------------------- driver

def run_backward(ops, values, needs, grads):
    """Drive the reversed tape: ops newest-first is handled here.

    `grads` is a list parallel to `values`, seeded with the loss gradient;
    entries are allocated lazily and only for values flagged in `needs`.
    """

    def acc(vid):
        if not needs[vid]:
            return None
        g = grads[vid]
        if g is None:
            g = np.zeros_like(values[vid])
            grads[vid] = g
        return g

    for opcode, out, ins, aux in reversed(ops):
        go = grads[out]
        if go is None:
            continue
        if opcode == MATMUL:
            a, b = ins
            b_matmul(go, values[a], values[b], acc(a), acc(b))
        elif opcode == TRANSPOSE:
            b_transpose(go, acc(ins[0]))
        elif opcode == ADD:
            b_add(go, acc(ins[0]), acc(ins[1]))
        elif opcode == ADD_ROWVEC:
            b_add_rowvec(go, acc(ins[0]), acc(ins[1]))
        elif opcode == MUL:
            a, b = ins
            b_mul(go, values[a], values[b], acc(a), acc(b))
        elif opcode == MUL_COLVEC:
            a, v = ins
            b_mul_colvec(go, values[a], values[v], acc(a), acc(v))
        elif opcode == SCALE_TENSOR:
            s, a = ins
            b_scale_tensor(go, values[s], values[a], acc(s), acc(a))
        elif opcode == SCALE_CONST:
            b_scale_const(go, aux, acc(ins[0]))
        elif opcode == RELU:
            b_relu(go, values[out], acc(ins[0]))
        elif opcode == TANH:
            b_tanh(go, values[out], acc(ins[0]))
        elif opcode == SOFTMAX_G:
            b_softmax_global(go, values[out], acc(ins[0]))
        elif opcode == SOFTMAX_R:
            b_softmax_rows(go, values[out], acc(ins[0]))
        elif opcode == CONCAT_COLS:
            b_concat_cols(go, values[ins[0]].shape[1], acc(ins[0]), acc(ins[1]))
        elif opcode == CONCAT_ROWS:
            b_concat_rows(go, values[ins[0]].shape[0], acc(ins[0]), acc(ins[1]))
        elif opcode == SUM_ALL:
            b_sum_all(go, acc(ins[0]))
        elif opcode == MEAN_ROWS:
            b_mean_rows(go, values[ins[0]].shape[0], acc(ins[0]))
        elif opcode == GATHER_ROWS:
            b_gather_rows(go, aux, acc(ins[0]))
        elif opcode == PAIR_CONCAT:
            p, c = values[ins[0]].shape
            b_pair_concat(go, p, c, acc(ins[0]))
        elif opcode == RESHAPE:
            r, s = values[ins[0]].shape
            b_reshape(go, r, s, acc(ins[0]))
        elif opcode == CROSS_ENTROPY:
            b_cross_entropy(go, values[ins[0]], aux, acc(ins[0]))
        else:
            raise AssertionError(f"unknown opcode {opcode}")
    return grads
