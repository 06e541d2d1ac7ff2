"""
Arithmetic in the twisted torus algebra
=======================================

Elements are finite Laurent series sum a_{mn} U^m V^n in two unitaries
obeying U V = e^{2 pi i theta} V U.  This script walks through products,
adjoints, the normalized trace, and the torus of symmetries that rotates
each generator by a phase.
"""

import math

from ncqbm.torus import (AlgebraContext, TorusElement, act, cond_expectation,
                         mul, star, trace)

theta = (math.sqrt(5.0) - 1.0) / 2.0
ctx = AlgebraContext(theta)

u = TorusElement.monomial(ctx, 1, 0)
v = TorusElement.monomial(ctx, 0, 1)

# The defining exchange relation: commuting V past U costs a phase.
uv = mul(u, v)
vu = mul(v, u)
phase = uv.coeff(1, 1) / vu.coeff(1, 1)
print(f"UV / VU phase        : {phase:.12f}")
print(f"expected e^(2pi i th): {complex(math.cos(2*math.pi*theta), math.sin(2*math.pi*theta)):.12f}")

# Monomials are unitaries: U* U = 1, and the star reverses order with the
# same twist, so (UV)* (UV) = 1 as well.
print(f"U* U == 1            : {mul(star(u), u).isclose(TorusElement.one(ctx))}")
print(f"(UV)* (UV) == 1      : {mul(star(uv), uv).isclose(TorusElement.one(ctx))}")

# The trace picks out the constant coefficient; it is a faithful state and
# tracial: trace(ab) = trace(ba) even though ab != ba.
a = TorusElement(ctx, {(1, 0): 0.5, (0, 1): 2.0, (-1, -1): 1.0 + 0.25j})
b = TorusElement(ctx, {(1, 1): 1.0, (0, -1): -0.75})
print(f"trace(ab) - trace(ba): {abs(trace(mul(a, b)) - trace(mul(b, a))):.2e}")

# The two-torus of gauge symmetries multiplies a_{mn} by x^m y^n.  Averaging
# over the second circle is the conditional expectation onto the U-line.
x = complex(math.cos(0.7), math.sin(0.7))
rotated = act(x, 1.0, a)
print(f"act scales (1,0) coefficient by x: {rotated.coeff(1, 0) / a.coeff(1, 0):.6f} vs {x:.6f}")

diag = cond_expectation(a, axis=1)
print(f"conditional expectation keeps only U-powers: support {diag.support()}")
