"""Strong coupling, first order: 2J F(J) and 2J M(J) creep up to 1.

Both densities are computed on the same field realisations so the gap
F - M is resolved much better than either density alone.

    python3 demos/first_order.py [N]
"""
import sys

from rfic import SeededStream, joint_densities, parse_law

N = int(float(sys.argv[1])) if len(sys.argv) > 1 else 2_000_000
law = parse_law("gaussian:1")
theta2 = law.variance()

print(f"gaussian(1), N={N:.0e}, 8 replicas per J")
print(f"{'J':>4} {'2J F/th2':>10} {'2J M/th2':>10} {'(F-M)(2J)^2':>12}")
for i, J in enumerate((1.0, 2.0, 3.0, 5.0, 8.0)):
    jd = joint_densities(law, J, N, 8, SeededStream(11).split(i))
    F, M, _ = jd.estimates()
    gap = (jd.F - jd.M_dp).mean() * (2 * J) ** 2 / theta2
    print(f"{J:4g} {2 * J * F.mean / theta2:10.5f} {2 * J * M.mean / theta2:10.5f} {gap:12.4f}")

# The last column settles near kappa_tilde (about 0.95 for the gaussian);
# theta^2/F - 2J tends to kappa_hat - kappa_tilde, see constants.py.
