"""Local polynomial models of boundary contact.

Near a trajectory with multiplicity word w the flow looks like the
family of polynomials

    p(u, x) = prod_i [ (u - i)^w_i + sum_{l <= w_i - 2} x_{i,l} (u - i)^l ]

with u the flow coordinate and the lower coefficients x_{i,l} as
transverse coordinates.  Freezing the coefficients along the flow
turns each coefficient slice into a one-dimensional flow whose divisor
is the root pattern of the perturbed polynomial, so tracing the model
scene reads off exactly how the word degenerates under perturbation.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TravflowError
from .expr import Add, Constant, IntPow, Mul, Sub, Variable
from .scene import Scene, ToleranceSet
from .tracer import Divisor, check_parity, norms, omega_of, stability_margin, trace

COEFFICIENT_BOX = 0.3
MAX_COEFFICIENTS = 2


def _validate_word(word):
    word = tuple(int(m) for m in word)
    if not word or any(m < 1 for m in word):
        raise TravflowError("multiplicity word must be a nonempty tuple of positives")
    if len(word) == 1:
        if word[0] % 2 != 0:
            raise TravflowError("a singleton word must have even multiplicity")
    else:
        if word[0] % 2 == 0 or word[-1] % 2 == 0:
            raise TravflowError("endpoint multiplicities must be odd")
        if any(m % 2 != 0 for m in word[1:-1]):
            raise TravflowError("interior multiplicities must be even")
    if max(word) > 4:
        # order-4 contact is the deepest the ambient classification
        # resolves, so larger letters cannot be certified
        raise TravflowError("multiplicities above 4 are not resolvable")
    return word


def coefficient_slots(word):
    """The (factor, power) deformation slots actually modeled: lowest
    powers first within each factor, truncated to MAX_COEFFICIENTS so
    the ambient dimension stays at most 3."""
    word = _validate_word(word)
    slots = []
    for position, multiplicity in enumerate(word, start=1):
        for power in range(multiplicity - 1):
            slots.append((position, power))
    return slots[:MAX_COEFFICIENTS]


def build_polynomial(word):
    """Product expression of the deformed root factors, with u as x0
    and the deformation coefficients as x1, x2, ... in slot order."""
    word = _validate_word(word)
    slots = coefficient_slots(word)
    variable_of = {slot: index + 1 for index, slot in enumerate(slots)}
    factors = []
    for position, multiplicity in enumerate(word, start=1):
        shift = Sub(Variable(0), Constant(float(position)))
        factor = IntPow(shift, multiplicity)
        for power in range(multiplicity - 1):
            slot = (position, power)
            if slot not in variable_of:
                continue
            term = Mul(Variable(variable_of[slot]), IntPow(shift, power))
            factor = Add(factor, term)
        factors.append(factor)
    product = factors[0]
    for factor in factors[1:]:
        product = Mul(product, factor)
    return product


def model_scene(word):
    """Scene whose trajectories are the coefficient slices of the
    local model: dimension 1 + the number of modeled slots, flow
    along u."""
    word = _validate_word(word)
    dimension = 1 + len(coefficient_slots(word))
    z = build_polynomial(word)
    v = tuple([Constant(1.0)] + [Constant(0.0)] * (dimension - 1))
    f = Variable(0)
    lo = tuple([0.0] + [-COEFFICIENT_BOX] * (dimension - 1))
    hi = tuple([float(len(word) + 1)] + [COEFFICIENT_BOX] * (dimension - 1))
    return Scene(dimension=dimension, z=z, v=v, f=f,
                 bbox_lo=lo, bbox_hi=hi, tol=ToleranceSet())


def _seed_u(word):
    return 1.0 if len(word) == 1 else 1.5


def roundtrip(word, epsilon=1e-2):
    """Trace the unperturbed model and every one-coefficient
    perturbation, and report how the word degenerates.

    The baseline divisor must reproduce the word itself.  Each
    perturbed divisor must satisfy the parity law with a strictly
    smaller reduced norm; a slice that misses the domain entirely is
    reported as empty."""
    word = _validate_word(word)
    scene = model_scene(word)
    dimension = scene.dimension
    base_seed = [_seed_u(word)] + [0.0] * (dimension - 1)

    baseline = trace(scene, base_seed, want_polyline=False)
    baseline_ok = baseline.omega.word == word
    records = [baseline]

    perturbations = []
    for axis in range(1, dimension):
        for sign in (1, -1):
            seed = list(base_seed)
            seed[axis] = sign * epsilon
            entry = {"axis": axis, "sign": sign}
            try:
                record = trace(scene, seed, want_polyline=False)
            except TravflowError:
                entry["empty"] = True
                perturbations.append(entry)
                continue
            records.append(record)
            total, reduced = norms(record.omega.word)
            entry.update({
                "empty": False,
                "omega": list(record.omega.word),
                "norm": total,
                "reduced_norm": reduced,
                "parity_ok": check_parity(record.divisor),
                "norm_drop": reduced < sum(m - 1 for m in word),
            })
            perturbations.append(entry)

    margin = stability_margin(scene, records)
    return {
        "word": list(word),
        "dimension": dimension,
        "epsilon": epsilon,
        "baseline": {"omega": list(baseline.omega.word), "match": baseline_ok},
        "perturbations": perturbations,
        "stability_margin": margin,
        "ok": baseline_ok and all(
            entry.get("empty") or (entry["parity_ok"] and entry["norm_drop"])
            for entry in perturbations),
    }
