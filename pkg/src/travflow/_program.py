"""Flat evaluation programs.

Expression trees compile to a postfix opcode sequence run against a
value stack.  Both kernels (the compiled extension and the pure Python
twin) interpret the same layout, which keeps them interchangeable bit
for bit.  The Dormand-Prince 5(4) tableau also lives here; the compiled
kernel repeats the same decimal literals so both backends perform the
identical floating point operations in the identical order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TravflowError
from . import expr as ex

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_SIN, OP_COS, OP_EXP = range(10)

# Fixed stack bound shared with the compiled kernel.
MAX_STACK = 256


@dataclass
class Program:
    code: np.ndarray          # (n, 2) int32 rows of (opcode, argument)
    consts: np.ndarray        # float64 constant pool
    code_list: list = field(repr=False)
    consts_list: list = field(repr=False)
    stack_need: int = 0
    dimension: int = 0


@dataclass
class VectorProgram:
    """Concatenated programs for the components of a vector field."""
    code: np.ndarray
    consts: np.ndarray
    starts: np.ndarray        # int32, len ncomponents + 1, offsets into code
    code_list: list = field(repr=False)
    consts_list: list = field(repr=False)
    starts_list: list = field(repr=False)
    ncomponents: int = 0
    stack_need: int = 0
    dimension: int = 0


def _emit(expression, code, consts):
    if isinstance(expression, ex.Constant):
        code.append((OP_CONST, len(consts)))
        consts.append(float(expression.value))
    elif isinstance(expression, ex.Variable):
        code.append((OP_VAR, expression.index))
    elif isinstance(expression, ex.Add):
        _emit(expression.left, code, consts)
        _emit(expression.right, code, consts)
        code.append((OP_ADD, 0))
    elif isinstance(expression, ex.Sub):
        _emit(expression.left, code, consts)
        _emit(expression.right, code, consts)
        code.append((OP_SUB, 0))
    elif isinstance(expression, ex.Mul):
        _emit(expression.left, code, consts)
        _emit(expression.right, code, consts)
        code.append((OP_MUL, 0))
    elif isinstance(expression, ex.Div):
        _emit(expression.left, code, consts)
        _emit(expression.right, code, consts)
        code.append((OP_DIV, 0))
    elif isinstance(expression, ex.IntPow):
        _emit(expression.base, code, consts)
        code.append((OP_POW, expression.exponent))
    elif isinstance(expression, ex.Sin):
        _emit(expression.arg, code, consts)
        code.append((OP_SIN, 0))
    elif isinstance(expression, ex.Cos):
        _emit(expression.arg, code, consts)
        code.append((OP_COS, 0))
    elif isinstance(expression, ex.Exp):
        _emit(expression.arg, code, consts)
        code.append((OP_EXP, 0))
    else:
        raise TypeError(f"not an expression node: {expression!r}")


def _stack_need(code):
    depth = 0
    deepest = 0
    for opcode, _ in code:
        if opcode in (OP_CONST, OP_VAR):
            depth += 1
        elif opcode in (OP_ADD, OP_SUB, OP_MUL, OP_DIV):
            depth -= 1
        deepest = max(deepest, depth)
    if depth != 1:
        raise TravflowError("malformed program")
    return deepest


def compile_program(expression, dimension):
    code = []
    consts = []
    _emit(expression, code, consts)
    need = _stack_need(code)
    if need > MAX_STACK:
        raise TravflowError(f"expression too deep for the kernel stack ({need} > {MAX_STACK})")
    return Program(
        code=np.array(code, dtype=np.int32).reshape(len(code), 2),
        consts=np.array(consts, dtype=np.float64),
        code_list=[tuple(row) for row in code],
        consts_list=list(consts),
        stack_need=need,
        dimension=dimension,
    )


def compile_vector(expressions, dimension):
    code = []
    consts = []
    starts = [0]
    need = 0
    for component in expressions:
        local_code = []
        # constants land in the shared pool, already offset by _emit
        _emit(component, local_code, consts)
        code.extend(local_code)
        starts.append(len(code))
        need = max(need, _stack_need(local_code))
    if need > MAX_STACK:
        raise TravflowError(f"expression too deep for the kernel stack ({need} > {MAX_STACK})")
    return VectorProgram(
        code=np.array(code, dtype=np.int32).reshape(len(code), 2),
        consts=np.array(consts, dtype=np.float64),
        starts=np.array(starts, dtype=np.int32),
        code_list=[tuple(row) for row in code],
        consts_list=list(consts),
        starts_list=list(starts),
        ncomponents=len(expressions),
        stack_need=need,
        dimension=dimension,
    )


# Dormand-Prince 5(4) coefficients.  E is the difference between the
# fifth and fourth order weights; the embedded error of a step of size h
# is h * sum(E[j] * k[j]).
DP_A21 = 1.0 / 5.0
DP_A31 = 3.0 / 40.0
DP_A32 = 9.0 / 40.0
DP_A41 = 44.0 / 45.0
DP_A42 = -56.0 / 15.0
DP_A43 = 32.0 / 9.0
DP_A51 = 19372.0 / 6561.0
DP_A52 = -25360.0 / 2187.0
DP_A53 = 64448.0 / 6561.0
DP_A54 = -212.0 / 729.0
DP_A61 = 9017.0 / 3168.0
DP_A62 = -355.0 / 33.0
DP_A63 = 46732.0 / 5247.0
DP_A64 = 49.0 / 176.0
DP_A65 = -5103.0 / 18656.0
DP_B1 = 35.0 / 384.0
DP_B3 = 500.0 / 1113.0
DP_B4 = 125.0 / 192.0
DP_B5 = -2187.0 / 6784.0
DP_B6 = 11.0 / 84.0
DP_E1 = 71.0 / 57600.0
DP_E3 = -71.0 / 16695.0
DP_E4 = 71.0 / 1920.0
DP_E5 = -17253.0 / 339200.0
DP_E6 = 22.0 / 525.0
DP_E7 = -1.0 / 40.0
