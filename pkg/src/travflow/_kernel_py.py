"""Pure Python twin of the compiled kernel.

Same program layout, same operation order, same scalar semantics
(repeated-multiplication powers, exp overflow to inf, sin/cos of a
non-finite argument giving nan), so results agree with the extension
module bit for bit.  Used automatically when the extension failed to
build; also handy under a debugger.
"""

from __future__ import annotations

import numpy as np

from .errors import EvalDomainError
from .expr import pow_int, safe_cos, safe_exp, safe_sin
from ._program import (
    OP_ADD, OP_CONST, OP_COS, OP_DIV, OP_EXP, OP_MUL, OP_POW, OP_SIN, OP_SUB, OP_VAR,
    DP_A21, DP_A31, DP_A32, DP_A41, DP_A42, DP_A43, DP_A51, DP_A52, DP_A53, DP_A54,
    DP_A61, DP_A62, DP_A63, DP_A64, DP_A65,
    DP_B1, DP_B3, DP_B4, DP_B5, DP_B6,
    DP_E1, DP_E3, DP_E4, DP_E5, DP_E6, DP_E7,
)

NAME = "python"


def _run(code, consts, point, start, end, stack):
    sp = 0
    for index in range(start, end):
        opcode, argument = code[index]
        if opcode == OP_CONST:
            stack[sp] = consts[argument]
            sp += 1
        elif opcode == OP_VAR:
            stack[sp] = point[argument]
            sp += 1
        elif opcode == OP_ADD:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif opcode == OP_SUB:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif opcode == OP_MUL:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif opcode == OP_DIV:
            sp -= 1
            if stack[sp] == 0.0:
                raise EvalDomainError("division by zero during evaluation")
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif opcode == OP_POW:
            stack[sp - 1] = pow_int(stack[sp - 1], argument)
        elif opcode == OP_SIN:
            stack[sp - 1] = safe_sin(stack[sp - 1])
        elif opcode == OP_COS:
            stack[sp - 1] = safe_cos(stack[sp - 1])
        else:
            stack[sp - 1] = safe_exp(stack[sp - 1])
    return stack[0]


def eval_program(program, point):
    stack = [0.0] * program.stack_need
    return float(_run(program.code_list, program.consts_list, point,
                      0, len(program.code_list), stack))


def eval_program_batch(program, points):
    points = np.asarray(points, dtype=np.float64)
    out = np.empty(points.shape[0], dtype=np.float64)
    stack = [0.0] * program.stack_need
    code = program.code_list
    consts = program.consts_list
    end = len(code)
    for row in range(points.shape[0]):
        out[row] = _run(code, consts, points[row], 0, end, stack)
    return out


def eval_vector(vector_program, point, out):
    stack = [0.0] * vector_program.stack_need
    code = vector_program.code_list
    consts = vector_program.consts_list
    starts = vector_program.starts_list
    for component in range(vector_program.ncomponents):
        out[component] = _run(code, consts, point,
                              starts[component], starts[component + 1], stack)


def _field(vector_program, point, out, direction, stack):
    code = vector_program.code_list
    consts = vector_program.consts_list
    starts = vector_program.starts_list
    for component in range(vector_program.ncomponents):
        out[component] = direction * _run(code, consts, point,
                                          starts[component], starts[component + 1], stack)


def rk_step(vector_program, y, h, direction, k, y_out, err_out):
    """One Dormand-Prince 5(4) stage evaluation.  Writes the seven
    stage slopes into k, the fifth order result into y_out, and the
    embedded error estimate into err_out.  No step size logic here;
    the caller owns acceptance and retries."""
    dim = vector_program.dimension
    stack = [0.0] * vector_program.stack_need
    ytmp = [0.0] * dim

    _field(vector_program, y, k[0], direction, stack)
    for d in range(dim):
        ytmp[d] = y[d] + h * (DP_A21 * k[0][d])
    _field(vector_program, ytmp, k[1], direction, stack)
    for d in range(dim):
        ytmp[d] = y[d] + h * (DP_A31 * k[0][d] + DP_A32 * k[1][d])
    _field(vector_program, ytmp, k[2], direction, stack)
    for d in range(dim):
        ytmp[d] = y[d] + h * (DP_A41 * k[0][d] + DP_A42 * k[1][d] + DP_A43 * k[2][d])
    _field(vector_program, ytmp, k[3], direction, stack)
    for d in range(dim):
        ytmp[d] = y[d] + h * (DP_A51 * k[0][d] + DP_A52 * k[1][d]
                              + DP_A53 * k[2][d] + DP_A54 * k[3][d])
    _field(vector_program, ytmp, k[4], direction, stack)
    for d in range(dim):
        ytmp[d] = y[d] + h * (DP_A61 * k[0][d] + DP_A62 * k[1][d] + DP_A63 * k[2][d]
                              + DP_A64 * k[3][d] + DP_A65 * k[4][d])
    _field(vector_program, ytmp, k[5], direction, stack)
    for d in range(dim):
        y_out[d] = y[d] + h * (DP_B1 * k[0][d] + DP_B3 * k[2][d] + DP_B4 * k[3][d]
                               + DP_B5 * k[4][d] + DP_B6 * k[5][d])
    _field(vector_program, y_out, k[6], direction, stack)
    for d in range(dim):
        err_out[d] = h * (DP_E1 * k[0][d] + DP_E3 * k[2][d] + DP_E4 * k[3][d]
                          + DP_E5 * k[4][d] + DP_E6 * k[5][d] + DP_E7 * k[6][d])
