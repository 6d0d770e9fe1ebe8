"""
Choosing W, sigma and L
=======================

A rough error model balances the truncation bias theta**W, the sampling
error sqrt(W)/(sigma*sqrt(L)) and, when noise is added only to approximate a
deterministic system, the noise-induced change sigma/(dgamma*(1-theta)).
"""
import numpy as np

from kernel_response import ErgodicConfig, build_tent, ergodic_estimator
from kernel_response.costmodel import pilot_decay_rate, recommend_approximation, recommend_intrinsic
from kernel_response.experiments import rep_seed

# %% Estimate theta from a short pilot orbit
p = build_tent(3.0, 0.1)
theta = pilot_decay_rate(p, 3.0, n_steps=20_000)
print(f"pilot decay rate theta ~ {theta:.2f}")
# Correlations of x itself die within a step or two for this map, so the fit
# suggests a tiny window; W = 7 is a conservative default that also covers
# slower observables.

# %% Intrinsic noise: sigma is given
for eps in (0.1, 0.05, 0.02):
    rec = recommend_intrinsic(eps, theta, 0.1)
    print(f"eps={eps}: W={rec.W}, L={rec.L}")

# %% Noise as an approximation device
rec = recommend_approximation(0.1, 0.5, 1.0)
print(f"approximation case: sigma={rec.sigma:.3g}, W={rec.W}, L={rec.L}")

# %% Check one recommendation by repetition
eps = 0.05
rec = recommend_intrinsic(eps, theta, 0.1)
runs = [ergodic_estimator(p.system, p.noise, p.observable,
                          ErgodicConfig(W=rec.W, L=max(rec.L, 100 * rec.W), gamma=3.0, seed=rep_seed(0, k))).dphi_avg
        for k in range(10)]
print(f"repeated-run std {np.std(runs, ddof=1):.4f} against target {eps}")
