"""The two expansion constants for a few laws.

kappa_hat comes from ladder heights of the random walk of fields,
kappa_tilde from the environment seen around a Gamma-minimum. Their
difference is the second-order coefficient of the free energy.
"""
import warnings

from rfic import SeededStream, kappa_hat, kappa_tilde, parse_law

warnings.simplefilter("ignore", RuntimeWarning)

# uniform ladders are simulated step by step and their epochs are heavy
# tailed, so a long run eventually hits the step cap: keep n small there
for spec, n in (("rademacher:1", 50_000), ("laplace:1", 50_000), ("gaussian:1", 50_000),
                ("uniform:1", 5_000)):
    law = parse_law(spec)
    kh = kappa_hat(law, n, SeededStream(3))
    line = f"{spec:13s} kappa_hat {kh.mean:7.4f} ± {kh.stderr:.4f}"
    if law.continuous:
        kt = kappa_tilde(law, [12.0], 1000, SeededStream(4))[0]
        line += f"   kappa_tilde(Gamma=12) inner {kt.inner.mean:.3f}  full {kt.full.mean:.3f}"
    print(line)

# rademacher gives exactly 1 and laplace 2: ladder heights are a point mass
# and an exponential there. kappa_tilde still moves with Gamma at these
# sizes; the full functional converges faster than the inner one.
