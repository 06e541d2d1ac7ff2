"""
A projection of trace theta in banded form
==========================================

In the banded (crossed-product) picture an element is a finite sum
f_{-1}(U) V^{-1} + f_0(U) + f_1(U) V.  With a trapezoid profile f_0 and a
matched square-root bump f_1, the three bands assemble into a projection
P = P^2 = P^* whose trace equals the rotation angle theta -- a nontrivial
idempotent that a commutative algebra of functions could never contain.
"""

import math

from ncqbm.banded import (RieffelProjectionSpec, build_rieffel_projection,
                          is_projection, member_of_X, trace_banded)

theta = (math.sqrt(5.0) - 1.0) / 2.0
spec = RieffelProjectionSpec(theta=theta, epsilon=theta / 2.0, scale_k=1)
p = build_rieffel_projection(spec, n=4096)

report = is_projection(p)
print(f"||P^2 - P||_sup  : {report.sup_idempotent:.3e}")
print(f"||P* - P||_sup   : {report.sup_hermitian:.3e}")
print(f"trace(P)         : {report.trace.real:.15f}")
print(f"theta            : {theta:.15f}")
print(f"|trace - theta|  : {abs(report.trace - theta):.3e}")

# The membership check confirms the three-band Hermitian structure: bands
# outside {-1,0,1} vanish and f_{-1}(t) = conj(f_1(t + theta)).
membership = member_of_X(p)
print(f"three-band member: {membership.member} "
      f"(far bands {membership.far_band_sup:.2e}, "
      f"pairing {membership.pairing_residual:.2e})")

# The same construction at the doubled angle: generated by U^2 and V^2 the
# banded copy rotates by {2 theta}, and the projection trace follows it.
spec2 = RieffelProjectionSpec(theta=theta, epsilon=0.1, scale_k=2)
p2 = build_rieffel_projection(spec2, n=4096)
print(f"scale_k=2 effective angle {spec2.effective_angle:.12f}, "
      f"trace {trace_banded(p2).real:.12f}")

# Epsilon must leave room below the effective angle; the constructor
# rejects anything else rather than building a non-projection.
try:
    RieffelProjectionSpec(theta=theta, epsilon=theta * 1.5, scale_k=1)
except ValueError as exc:
    print(f"rejected bad epsilon: {exc}")
