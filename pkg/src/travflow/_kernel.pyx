# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel.

Interprets the flat programs from _program against a C value stack and
runs single Dormand-Prince stages.  The pure Python twin in _kernel_py
performs the identical floating point operations in the identical
order, so the two backends agree bit for bit; any change here must be
mirrored there.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos as c_cos, exp as c_exp, sin as c_sin

from .errors import EvalDomainError, TravflowError

cnp.import_array()

NAME = "compiled"

# Opcode values mirror _program: CONST, VAR, ADD, SUB, MUL, DIV, POW,
# SIN, COS, EXP = 0..9.

cdef int _run(const cnp.int32_t* code, const double* consts, const double* point,
              int start, int end, double* stack, double* result) noexcept nogil:
    cdef int sp = 0
    cdef int index, opcode, argument, i
    cdef double base, acc
    for index in range(start, end):
        opcode = code[2 * index]
        argument = code[2 * index + 1]
        if opcode == 0:
            stack[sp] = consts[argument]
            sp += 1
        elif opcode == 1:
            stack[sp] = point[argument]
            sp += 1
        elif opcode == 2:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif opcode == 3:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif opcode == 4:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif opcode == 5:
            sp -= 1
            if stack[sp] == 0.0:
                return 1
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif opcode == 6:
            base = stack[sp - 1]
            acc = 1.0
            for i in range(argument):
                acc = acc * base
            stack[sp - 1] = acc
        elif opcode == 7:
            stack[sp - 1] = c_sin(stack[sp - 1])
        elif opcode == 8:
            stack[sp - 1] = c_cos(stack[sp - 1])
        else:
            stack[sp - 1] = c_exp(stack[sp - 1])
    result[0] = stack[0]
    return 0


cdef int _field(const cnp.int32_t* code, const double* consts, const cnp.int32_t* starts,
                int ncomponents, const double* point, double* out, double direction,
                double* stack) noexcept nogil:
    cdef int component, status
    cdef double value
    for component in range(ncomponents):
        status = _run(code, consts, point, starts[component], starts[component + 1],
                      stack, &value)
        if status:
            return status
        out[component] = direction * value
    return 0


def eval_program(program, point):
    cdef const cnp.int32_t[:, ::1] code = program.code
    cdef const double[::1] consts = program.consts
    pt = np.ascontiguousarray(point, dtype=np.float64)
    cdef const double[::1] pmv = pt
    cdef const double* consts_ptr = NULL
    cdef const double* point_ptr = NULL
    if consts.shape[0] > 0:
        consts_ptr = &consts[0]
    if pmv.shape[0] > 0:
        point_ptr = &pmv[0]
    cdef double stack[256]
    cdef double result = 0.0
    if _run(&code[0, 0], consts_ptr, point_ptr, 0, <int> code.shape[0], stack, &result):
        raise EvalDomainError("division by zero during evaluation")
    return result


def eval_program_batch(program, points):
    cdef const cnp.int32_t[:, ::1] code = program.code
    cdef const double[::1] consts = program.consts
    pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] pmv = pts
    out_array = np.empty(pmv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_array
    cdef const double* consts_ptr = NULL
    if consts.shape[0] > 0:
        consts_ptr = &consts[0]
    cdef double stack[256]
    cdef int end = <int> code.shape[0]
    cdef Py_ssize_t row
    for row in range(pmv.shape[0]):
        if _run(&code[0, 0], consts_ptr, &pmv[row, 0], 0, end, stack, &out[row]):
            raise EvalDomainError("division by zero during evaluation")
    return out_array


def eval_vector(vector_program, point, out):
    cdef const cnp.int32_t[:, ::1] code = vector_program.code
    cdef const double[::1] consts = vector_program.consts
    cdef const cnp.int32_t[::1] starts = vector_program.starts
    pt = np.ascontiguousarray(point, dtype=np.float64)
    cdef const double[::1] pmv = pt
    cdef double[::1] omv = out
    cdef const double* consts_ptr = NULL
    if consts.shape[0] > 0:
        consts_ptr = &consts[0]
    cdef double stack[256]
    if _field(&code[0, 0], consts_ptr, &starts[0], vector_program.ncomponents,
              &pmv[0], &omv[0], 1.0, stack):
        raise EvalDomainError("division by zero during evaluation")


cdef double DP_A21 = 1.0 / 5.0
cdef double DP_A31 = 3.0 / 40.0
cdef double DP_A32 = 9.0 / 40.0
cdef double DP_A41 = 44.0 / 45.0
cdef double DP_A42 = -56.0 / 15.0
cdef double DP_A43 = 32.0 / 9.0
cdef double DP_A51 = 19372.0 / 6561.0
cdef double DP_A52 = -25360.0 / 2187.0
cdef double DP_A53 = 64448.0 / 6561.0
cdef double DP_A54 = -212.0 / 729.0
cdef double DP_A61 = 9017.0 / 3168.0
cdef double DP_A62 = -355.0 / 33.0
cdef double DP_A63 = 46732.0 / 5247.0
cdef double DP_A64 = 49.0 / 176.0
cdef double DP_A65 = -5103.0 / 18656.0
cdef double DP_B1 = 35.0 / 384.0
cdef double DP_B3 = 500.0 / 1113.0
cdef double DP_B4 = 125.0 / 192.0
cdef double DP_B5 = -2187.0 / 6784.0
cdef double DP_B6 = 11.0 / 84.0
cdef double DP_E1 = 71.0 / 57600.0
cdef double DP_E3 = -71.0 / 16695.0
cdef double DP_E4 = 71.0 / 1920.0
cdef double DP_E5 = -17253.0 / 339200.0
cdef double DP_E6 = 22.0 / 525.0
cdef double DP_E7 = -1.0 / 40.0


def rk_step(vector_program, y, double h, double direction, k, y_out, err_out):
    """One Dormand-Prince 5(4) stage evaluation.  Writes the seven
    stage slopes into k, the fifth order result into y_out, and the
    embedded error estimate into err_out."""
    cdef const cnp.int32_t[:, ::1] code = vector_program.code
    cdef const double[::1] consts = vector_program.consts
    cdef const cnp.int32_t[::1] starts = vector_program.starts
    cdef int ncomponents = vector_program.ncomponents
    cdef int dim = vector_program.dimension
    cdef double[::1] ymv = y
    cdef double[:, ::1] kmv = k
    cdef double[::1] yo = y_out
    cdef double[::1] eo = err_out
    cdef const double* consts_ptr = NULL
    if consts.shape[0] > 0:
        consts_ptr = &consts[0]
    cdef double stack[256]
    cdef double ytmp[32]
    cdef int d, status
    if dim > 32:
        raise TravflowError("dimension too large for the kernel")

    status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                    &ymv[0], &kmv[0, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            ytmp[d] = ymv[d] + h * (DP_A21 * kmv[0, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        ytmp, &kmv[1, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            ytmp[d] = ymv[d] + h * (DP_A31 * kmv[0, d] + DP_A32 * kmv[1, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        ytmp, &kmv[2, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            ytmp[d] = ymv[d] + h * (DP_A41 * kmv[0, d] + DP_A42 * kmv[1, d]
                                    + DP_A43 * kmv[2, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        ytmp, &kmv[3, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            ytmp[d] = ymv[d] + h * (DP_A51 * kmv[0, d] + DP_A52 * kmv[1, d]
                                    + DP_A53 * kmv[2, d] + DP_A54 * kmv[3, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        ytmp, &kmv[4, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            ytmp[d] = ymv[d] + h * (DP_A61 * kmv[0, d] + DP_A62 * kmv[1, d]
                                    + DP_A63 * kmv[2, d] + DP_A64 * kmv[3, d]
                                    + DP_A65 * kmv[4, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        ytmp, &kmv[5, 0], direction, stack)
    if status == 0:
        for d in range(dim):
            yo[d] = ymv[d] + h * (DP_B1 * kmv[0, d] + DP_B3 * kmv[2, d]
                                  + DP_B4 * kmv[3, d] + DP_B5 * kmv[4, d]
                                  + DP_B6 * kmv[5, d])
        status = _field(&code[0, 0], consts_ptr, &starts[0], ncomponents,
                        &yo[0], &kmv[6, 0], direction, stack)
    if status:
        raise EvalDomainError("division by zero during evaluation")
    for d in range(dim):
        eo[d] = h * (DP_E1 * kmv[0, d] + DP_E3 * kmv[2, d] + DP_E4 * kmv[3, d]
                     + DP_E5 * kmv[4, d] + DP_E6 * kmv[5, d] + DP_E7 * kmv[6, d])
