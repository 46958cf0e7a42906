from .tensor import (
    NumericError,
    Parameter,
    Tensor,
    add,
    concat,
    dot,
    dropout,
    embedding,
    exp,
    gather_rows,
    gather_time,
    log,
    log_softmax,
    matmul,
    mul,
    no_grad,
    relu,
    reshape,
    set_check_finite,
    sigmoid,
    softmax,
    softplus,
    square,
    stack,
    sub,
    tanh,
    tmax,
    tmean,
    transpose2d,
    tsum,
)
from .optim import SGD, Adam, clip_global_norm
from .gradcheck import GradCheckReport, grad_check

__all__ = [
    "NumericError",
    "Parameter",
    "Tensor",
    "add",
    "concat",
    "dot",
    "dropout",
    "embedding",
    "exp",
    "gather_rows",
    "gather_time",
    "log",
    "log_softmax",
    "matmul",
    "mul",
    "no_grad",
    "relu",
    "reshape",
    "set_check_finite",
    "sigmoid",
    "softmax",
    "softplus",
    "square",
    "stack",
    "sub",
    "tanh",
    "tmax",
    "tmean",
    "transpose2d",
    "tsum",
    "SGD",
    "Adam",
    "clip_global_norm",
    "GradCheckReport",
    "grad_check",
]
