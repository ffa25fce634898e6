"""Frozen constants for sample sizes and bound shapes.

The asymptotic statements being checked fix shapes only. Each constant below
was set by one run of scripts/calibrate.py (seed 0) and is not tuned per test.
"""

# collision tester: N = ceil(C0 sqrt(d) / eps'^2), midpoint threshold.
# Calibration (eps' = 1, 500 trials each): accept/reject rates 1.000/1.000 at
# d in {64, 100, 256}.
C0 = 16.0

# certifier: N = ceil(C1 d^{3/2} / eps^2), inner tester detecting eps/(2d).
# Calibration (250 trials each), YES on I/d / NO on the hard instance:
# 0.940/0.984 at (d, eps) = (8, 0.5), 0.960/1.000 at (16, 0.5), 0.976/1.000 at (16, 0.25).
C1 = 24.0

# Delta(x_<t) >= (1 - C_DELTA eps^2 / d)^{t-1}, fixed-basis transcripts.
# Largest implied value over d in {4, 8, 16}, eps in {0.25, 0.5}, t = 20: 0.36;
# rounded up to 1.
C_DELTA = 1.0

# Psi second moment in the classical instance: (1 + C_PSI_CLASSICAL eps^2)^{t-1}.
# The exact per-step factor peaks at z = z': 1 + 6 eps^2 + eps^4 <= 1 + 7 eps^2.
C_PSI_CLASSICAL = 9.0

# P(||diag(U^dagger X' U)||_HS >= 1 + t) <= exp(-DIAG_TAIL_C d t^2): Lipschitz
# constant 2 in the Haar concentration inequality exp(-d t^2 / (12 L^2)).
DIAG_TAIL_C = 1.0 / 48.0

# P(|phi| > t) <= exp(-PHI_TAIL_C min(d^3 t^2 / eps^4, d^2 t / eps^2)).
# Smallest implied value over d in {8, 16, 32}, eps in {0.25, 0.5}: 0.63; halved.
PHI_TAIL_C = 0.3

# P(K > K_TAIL_C eps^2/d + t) <= exp(-K_TAIL_C_PRIME t d^2 / eps^2) for t > K_TAIL_C eps^2/d.
# K_TAIL_C = 2 covers E[K] = 2 eps^2/(d+1). Smallest implied c' on the grid above: 0.16; halved.
K_TAIL_C = 2.0
K_TAIL_C_PRIME = 0.08

# E[(1 + gamma K)^n] <= exp(C_MOMENT gamma n eps^2 / d).
# Largest implied value over d in {8, 16}, eps in {0.25, 0.5}, n <= 0.1 d^2/eps^2: 2.32; doubled.
C_MOMENT = 4.6

# E[Psi^2] <= exp(C_PSI_SQ t eps^2 / d), fixed basis.
# Largest implied value on the same grid, t <= 0.05 d^2/eps^2: 2.71; doubled.
C_PSI_SQ = 5.4
