"""Independent high-precision evaluation of the certificate constants.

Written directly from the constant definitions with mpmath, sharing no code
with the package.
"""
from __future__ import annotations

from mpmath import mp, mpf


def certificate_constants(a, D, g_lo, g_hi, C_F, alpha, L, M, T, dps=50):
    with mp.workdps(dps):
        a, D, g_lo, g_hi, C_F, alpha, L, M, T = map(mpf, (a, D, g_lo, g_hi, C_F, alpha, L, M, T))
        K0 = g_hi**2 * (1 + a**4) / D
        rho = (1 + K0 * g_hi**2) / a
        k1 = min(D / 2, g_lo, 2 * a * rho, 4 * a**3)
        Cp = L**4
        Cgn = max(mpf(2), 1 / L)
        K1 = max(2 * (K0 * g_hi**2 + 1) + rho * 32 / a**3, 1 / g_lo, 8 * C_F**4 * Cp, 9 * C_F**4 * L)
        P_hat = 2 * K1 * Cgn
        K2 = P_hat**2 / (2 * k1) + P_hat**2 / a
        beta = (1 - alpha) / 2
        kappa = min(beta, (2 / alpha) * (1 - beta - alpha))
        chi = max(mpf(1), 4 * a**2, rho)
        tau = max(9 * a, a + K1)
        s0 = max(mpf(0), mp.log((chi * M + 1) / mp.sqrt(tau)) / tau)
        # delta_star = min(1, (exp(-2 tau (s0+T)) / K2)^(1/kappa)), taken in logs
        log_delta = min(mpf(0), (-2 * tau * (s0 + T) - mp.log(K2)) / kappa)
        log_sigma = kappa * log_delta + mp.log(K2)
        return dict(
            K0=K0, rho=rho, k1=k1, Cp=Cp, Cgn=Cgn, K1=K1, K2=K2, beta=beta, kappa=kappa,
            chi=chi, tau=tau, s0=s0, log_sigma=log_sigma, log_delta_star=log_delta,
        )


def yhat_log(t, c, dps=50):
    with mp.workdps(dps):
        t = mpf(t)
        z = c["tau"] * (c["s0"] + t)
        return mp.log(mp.sqrt(c["tau"])) + z - mp.log(2 - mp.exp(c["log_sigma"] + 2 * z)) / 2
