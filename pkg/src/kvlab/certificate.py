"""Existence-time certificate: constants, the energy functional y and its
comparison function y_hat, and residual checks of the differential
inequalities along sampled trajectories.

sigma and delta_star are kept as logarithms throughout; for realistic inputs
delta_star is far below the smallest positive double.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .grid import DIRICHLET0, NEUMANN, Grid, diff1, trapezoid_values
from .material import MaterialSet
from .solver import InitialData, Params, Trajectory

LINEAR_Y_LIMIT = 1e100
DEFAULT_INEQ_TOL = 1e-4
MAX_SAMPLE_SPACING = 1e-2


class CertificateError(ValueError):
    pass


class CertificateDomainError(ArithmeticError):
    """y_hat evaluated where its denominator would vanish or go negative."""


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    gamma_lo: float
    gamma_hi: float
    C_F: float
    alpha: float
    omega_len: float
    M: float
    T_star: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise CertificateError(f"{f.name} must be finite")
        if not 0 < self.gamma_lo <= self.gamma_hi:
            raise CertificateError("need 0 < gamma_lo <= gamma_hi")
        if not 0 < self.alpha < 1:
            raise CertificateError("alpha must lie in (0, 1)")
        if not self.C_F > 0 or not self.omega_len > 0:
            raise CertificateError("C_F and omega_len must be positive")
        if self.M < 0:
            raise CertificateError("M must be nonnegative")
        if not self.T_star > 0:
            raise CertificateError("T_star must be positive")

    @classmethod
    def from_material(cls, m: MaterialSet, omega_len: float, M: float, T_star: float) -> "Bounds":
        return cls(m.gamma_lo, m.gamma_hi, m.C_F, m.alpha, omega_len, M, T_star)


@dataclass(frozen=True)
class Certificate:
    K0: float
    rho: float
    k1: float
    Cp: float
    Cgn: float
    K1: float
    K2: float
    beta: float
    kappa: float
    chi: float
    tau: float
    s0: float
    log_sigma: float
    log_delta_star: float
    # inputs echoed for downstream checks
    a: float
    D: float
    M: float
    T_star: float

    CSV_FIELDS = (
        "K0", "rho", "k1", "Cp", "Cgn", "K1", "K2", "beta", "kappa",
        "chi", "tau", "s0", "sigma_log", "delta_star_log",
    )

    def csv_values(self):
        d = asdict(self)
        d["sigma_log"] = self.log_sigma
        d["delta_star_log"] = self.log_delta_star
        return [d[k] for k in self.CSV_FIELDS]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        w.writerow([repr(float(v)) for v in self.csv_values()])
        return buf.getvalue()

    def to_text(self) -> str:
        rows = list(zip(self.CSV_FIELDS, self.csv_values()))
        rows.append(("delta_star_log10", self.log_delta_star / math.log(10)))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v:.15g}" for k, v in rows)


def compute_constants(p: Params, b: Bounds) -> Certificate:
    a, D = p.a, p.D
    L = b.omega_len
    K0 = (b.gamma_hi**2 / D) * (1.0 + a**4)
    rho = (K0 * b.gamma_hi**2 + 1.0) / a
    k1 = min(D / 2.0, b.gamma_lo, 2.0 * a * rho, 4.0 * a**3)
    Cp = L**4
    Cgn = max(2.0, 1.0 / L)
    K1 = max(
        2.0 * (K0 * b.gamma_hi**2 + 1.0) + 32.0 * rho / a**3,
        1.0 / b.gamma_lo,
        8.0 * b.C_F**4 * Cp,
        9.0 * b.C_F**4 * L,
    )
    P_hat = 2.0 * K1 * Cgn
    K2 = P_hat**2 / (2.0 * k1) + P_hat**2 / a
    beta = (1.0 - b.alpha) / 2.0
    kappa = min(beta, (2.0 / b.alpha) * (1.0 - beta - b.alpha))
    chi = max(1.0, 4.0 * a * a, rho)
    tau = max(9.0 * a, a + K1)
    s0 = max(0.0, (math.log1p(chi * b.M) - 0.5 * math.log(tau)) / tau)
    exponent = -2.0 * tau * (s0 + b.T_star)
    log_K2 = math.log(K2)
    log_delta = min(0.0, (exponent - log_K2) / kappa)
    # same as kappa*log_delta + log_K2, but exact so the y_hat denominator stays >= 1
    log_sigma = min(log_K2, exponent)
    return Certificate(
        K0, rho, k1, Cp, Cgn, K1, K2, beta, kappa, chi, tau, s0, log_sigma, log_delta,
        a=a, D=D, M=b.M, T_star=b.T_star,
    )


def initial_mass(data: InitialData, grid: Grid, p: Params) -> float:
    """Discrete left side of the initial-data size condition."""
    dx = grid.dx
    u0 = np.asarray(data.u0, dtype=float)
    ux = diff1(u0, dx, NEUMANN)
    utx = diff1(np.asarray(data.u0t, dtype=float), dx, NEUMANN)
    thx = diff1(np.asarray(data.theta0, dtype=float), dx, DIRICHLET0)
    total = utx**2 + ux**2 + ux**4 + thx**2
    return float(trapezoid_values(total, dx))


# ------------------------------------------------------------ y and y_hat


def y_functional(pack, cert: Certificate, p: Params) -> float:
    """ln y for a functional pack (any object with the int_* attributes)."""
    return _y_log(pack, cert.log_delta_star, cert.beta, cert.rho, p.a)


def _y_log(pack, log_delta, beta, rho, a):
    logs = []
    if pack.int_thx2 > 0:
        logs.append(0.5 * log_delta + math.log(pack.int_thx2))
    if pack.int_ux4 > 0:
        logs.append(beta * log_delta + math.log(rho) + math.log(pack.int_ux4))
    if pack.int_vx2 > 0:
        logs.append(math.log(pack.int_vx2))
    if pack.int_ux2 > 0:
        logs.append(math.log(4.0 * a * a) + math.log(pack.int_ux2))
    if not logs:
        return 0.0
    top = max(logs)
    if top < 700.0:
        return math.log1p(math.fsum(math.exp(v) for v in logs))
    # log-sum-exp including the leading 1
    logs.append(0.0)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def yhat_log(t, cert: Certificate, rtol: float = 1e-12):
    """ln y_hat(t) on [0, T_star]; vectorised over ``t``."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt < -rtol * cert.T_star) or np.any(tt > cert.T_star * (1 + rtol)):
        raise CertificateDomainError("y_hat is only defined on [0, T_star]")
    growth = cert.tau * (cert.s0 + tt)
    e = cert.log_sigma + 2.0 * growth
    if np.any(e > rtol * np.maximum(1.0, np.abs(2.0 * growth))):
        raise CertificateDomainError("sigma*exp(2 tau (s0+t)) exceeds 1; certificate is inconsistent")
    e = np.minimum(e, 0.0)
    out = 0.5 * math.log(cert.tau) + growth - 0.5 * np.log(2.0 - np.exp(e))
    return float(out) if np.ndim(t) == 0 else out


def yhat_rate(t, cert: Certificate):
    """tau + sigma*y_hat^2, the logarithmic growth rate of y_hat."""
    return cert.tau + np.exp(cert.log_sigma + 2.0 * yhat_log(t, cert))


# ------------------------------------------------------------ comparison


@dataclass
class ComparisonReport:
    n_samples: int
    n_violations: int
    margin_log: float
    worst_t: float
    yhat0_log: float
    chiM1_log: float
    y0_log: float
    first_violation_t: float | None = None

    @property
    def yhat0_ok(self) -> bool:
        return self.yhat0_log >= self.chiM1_log - 1e-12 * max(1.0, abs(self.chiM1_log))

    @property
    def y0_within_chiM1(self) -> bool:
        # reported, never fatal
        return self.y0_log <= self.chiM1_log + 1e-12 * max(1.0, abs(self.chiM1_log))

    @property
    def yhat0_half_ok(self) -> bool:
        """The bound that does hold in general: y_hat(0) >= (chi M + 1)/sqrt(2)."""
        return self.yhat0_log >= self.chiM1_log - 0.5 * math.log(2.0) - 1e-12 * max(1.0, abs(self.chiM1_log))

    @property
    def passed(self) -> bool:
        # the y_hat(0) >= chi M + 1 line is informational; see yhat0_half_ok
        return self.n_violations == 0

    def to_text(self) -> str:
        lines = [
            f"comparison ln y <= ln y_hat: {self.n_samples - self.n_violations}/{self.n_samples} samples hold",
            f"  min margin ln y_hat - ln y = {self.margin_log:.6g} at t = {self.worst_t:.6g}",
            f"  ln y_hat(0) = {self.yhat0_log:.6g} vs ln(chi M + 1) = {self.chiM1_log:.6g}: "
            + ("ok" if self.yhat0_ok else "below (flagged; the sqrt(2)-weakened bound " + ("holds" if self.yhat0_half_ok else "FAILS") + ")"),
            f"  ln y(0) = {self.y0_log:.6g}: "
            + ("within chi M + 1" if self.y0_within_chiM1 else "exceeds chi M + 1 (flagged)"),
        ]
        return "\n".join(lines)


def check_comparison(traj: Trajectory, cert: Certificate) -> ComparisonReport:
    p_a = traj.a
    t = traj.t
    ylog = np.array([
        s.y_log if s.y_log is not None else _y_log(s.pack, cert.log_delta_star, cert.beta, cert.rho, p_a)
        for s in traj.samples
    ])
    yhat = yhat_log(np.minimum(t, cert.T_star), cert)
    margin = yhat - ylog
    bad = margin < 0
    k = int(np.argmin(margin))
    return ComparisonReport(
        n_samples=len(t),
        n_violations=int(bad.sum()),
        margin_log=float(margin[k]),
        worst_t=float(t[k]),
        yhat0_log=float(yhat_log(0.0, cert)),
        chiM1_log=math.log1p(cert.chi * cert.M),
        y0_log=float(ylog[0]),
        first_violation_t=float(t[np.argmax(bad)]) if bad.any() else None,
    )


# ------------------------------------------------------------ lemma residuals

INEQUALITIES = (
    "ux2_balance",
    "ux4_balance",
    "vx2_balance",
    "thx2_balance",
    "mech_combined",
    "thermal_combined",
    "master_ode",
)
# these need sup|gamma'|, sup|f'| <= delta
_NEED_SMALLNESS = {"mech_combined", "thermal_combined", "master_ode"}


@dataclass
class InequalityResidual:
    name: str
    applicable: bool
    n_checked: int
    max_residual: float = float("nan")
    max_normalized: float = float("nan")
    worst_t: float = float("nan")
    note: str = ""

    @property
    def violation(self) -> float:
        """Positive part of the worst normalized residual."""
        return max(0.0, self.max_normalized) if self.applicable else 0.0


@dataclass
class LemmaReport:
    tol: float
    log_delta: float
    rows: list = field(default_factory=list)

    def row(self, name: str) -> InequalityResidual:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def satisfied(self, name: str) -> bool:
        r = self.row(name)
        return (not r.applicable) or r.max_normalized <= self.tol

    @property
    def passed(self) -> bool:
        return all(self.satisfied(r.name) for r in self.rows)

    def to_text(self) -> str:
        lines = [f"inequality residuals (tol {self.tol:g} * (1 + |RHS|), ln delta = {self.log_delta:.6g})"]
        for r in self.rows:
            if not r.applicable:
                lines.append(f"  {r.name:<16} skipped: {r.note}")
                continue
            verdict = "ok" if self.satisfied(r.name) else "VIOLATED"
            lines.append(
                f"  {r.name:<16} {verdict:<8} max residual {r.max_residual:.4e}"
                f"  normalized {r.max_normalized:.4e} at t = {r.worst_t:.6g}"
            )
        return "\n".join(lines)


def _interior_derivative(t, values):
    """Three-point derivative at interior samples, exact for quadratics."""
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    f0, f1, f2 = values[:-2], values[1:-1], values[2:]
    return (h0**2 * f2 - h1**2 * f0 + (h1**2 - h0**2) * f1) / (h0 * h1 * (h0 + h1))


def check_lemma_inequalities(
    traj: Trajectory,
    m: MaterialSet,
    p: Params,
    cert: Certificate,
    *,
    tol: float = DEFAULT_INEQ_TOL,
    log_delta: float | None = None,
    max_spacing: float = MAX_SAMPLE_SPACING,
) -> LemmaReport:
    """Residual LHS - RHS of each inequality at interior samples.

    ``log_delta`` defaults to the certified ln delta_star; the delta-weighted
    inequalities are only meaningful (and only checked) when the material's
    declared Lipschitz bounds do not exceed delta.
    """
    t = traj.t
    if len(t) < 3:
        raise SamplingError("need at least three samples for centered time differences")
    spacing = float(np.max(np.diff(t)))
    if spacing > max_spacing:
        raise SamplingError(
            f"sample spacing {spacing:.3g} exceeds {max_spacing:.3g}; lower sample_stride or dt"
        )
    ld = cert.log_delta_star if log_delta is None else float(log_delta)
    if ld > 0:
        raise ValueError("log_delta must be <= 0")
    a, D = p.a, p.D
    c = traj.column
    ux2, ux4, vx2, vx4, thx2 = (c(k) for k in ("int_ux2", "int_ux4", "int_vx2", "int_vx4", "int_thx2"))
    gvxx2, vxx2, thxx2 = c("int_gamma_vxx2"), c("int_vxx2"), c("int_thxx2")
    thx4, F2uxt2 = c("int_thx4"), c("int_F2_uxt2")
    gp2, fp2 = c("int_gp2_vx2_thx2"), c("int_fp2_thx2")

    def dt_(v):
        return _interior_derivative(t, v)

    def mid(v):
        return v[1:-1]

    def w(power):
        return math.exp(power * ld)

    K0, K1, k1, rho, beta, kappa = cert.K0, cert.K1, cert.k1, cert.rho, cert.beta, cert.kappa
    alpha = m.alpha
    pairs = {
        "ux2_balance": (0.5 * dt_(ux2) + 0.5 * a * mid(ux2), mid(vx2) / (2 * a)),
        "ux4_balance": (0.25 * dt_(ux4) + 0.5 * a * mid(ux4), 8.0 / a**3 * mid(vx4)),
        "vx2_balance": (
            0.5 * dt_(vx2) + 0.5 * mid(gvxx2),
            mid(gp2) + 2 * a * mid(vx2) + a**3 / 4 * mid(ux2) + mid(fp2),
        ),
        "thx2_balance": (
            0.5 * dt_(thx2) + 0.5 * D * mid(thxx2),
            K0 * mid(vx4) + K0 * mid(ux4) + mid(F2uxt2),
        ),
        "mech_combined": (
            dt_(vx2 + 4 * a * a * ux2) + k1 * mid(vxx2) + k1 * mid(ux2),
            w(3.5) * K1 * mid(thx4) + w(0.5) * K1 * mid(vx4) + 8 * a * mid(vx2) + w(2.0) * K1 * mid(thx2),
        ),
        "thermal_combined": (
            dt_(w(0.5) * thx2 + w(beta) * rho * ux4) + w(0.5) * k1 * mid(thxx2) + w(beta) * k1 * mid(ux4),
            w(beta) * K1 * mid(vx4) + w((1 - beta) / alpha) * K1 * mid(thx4) + K1,
        ),
    }
    smallness_ok = _lip_within(m.lip_gamma, ld) and _lip_within(m.lip_f, ld)
    report = LemmaReport(tol, ld)
    tm = t[1:-1]
    for name in INEQUALITIES:
        if name in _NEED_SMALLNESS and not smallness_ok:
            report.rows.append(
                InequalityResidual(name, False, 0, note="hypothesis not met: declared Lipschitz bound exceeds delta")
            )
            continue
        if name == "master_ode":
            lhs, rhs, norm = _master_ode(traj, cert, ld, beta, rho, kappa, a, t)
        else:
            lhs, rhs = pairs[name]
            norm = (lhs - rhs) / (1.0 + np.abs(rhs))
        res = lhs - rhs
        k = int(np.argmax(norm))
        report.rows.append(
            InequalityResidual(name, True, len(tm), float(np.max(res)), float(norm[k]), float(tm[k]))
        )
    return report


def _lip_within(lip, log_delta):
    return lip == 0.0 or math.log(lip) <= log_delta


def _master_ode(traj, cert, ld, beta, rho, kappa, a, t):
    ylog = np.array([_y_log(s.pack, ld, beta, rho, a) for s in traj.samples])
    log_sig = cert.log_sigma if ld == cert.log_delta_star else kappa * ld + math.log(cert.K2)
    if np.max(ylog) < math.log(LINEAR_Y_LIMIT):
        y = np.exp(ylog)
        lhs = _interior_derivative(t, y)
        ym = y[1:-1]
        rhs = np.exp(log_sig + 3 * np.log(ym)) + cert.tau * ym
    else:
        # divide through by y: (ln y)' <= sigma y^2 + tau
        lhs = _interior_derivative(t, ylog)
        rhs = np.exp(log_sig + 2 * ylog[1:-1]) + cert.tau
    return lhs, rhs, (lhs - rhs) / (1.0 + np.abs(rhs))


# ------------------------------------------------------------ feasibility


@dataclass
class Feasibility:
    feasible: bool
    log_delta_star: float
    gap_decades: float
    detail: str


def delta_feasibility(m: MaterialSet, cert: Certificate) -> Feasibility:
    """Compare declared sup|gamma'|, sup|f'| against the certified delta_star."""
    ld = cert.log_delta_star
    gaps = []
    for name, lip in (("lip_gamma", m.lip_gamma), ("lip_f", m.lip_f)):
        if lip == 0.0:
            gaps.append((name, -math.inf))
        else:
            gaps.append((name, (math.log(lip) - ld) / math.log(10.0)))
    worst_name, worst = max(gaps, key=lambda g: g[1])
    feasible = worst <= 0.0
    gap = max(0.0, worst)
    if feasible:
        detail = "declared Lipschitz bounds are within delta_star"
    else:
        detail = f"{worst_name} misses delta_star by {gap:.4g} decades"
    return Feasibility(feasible, ld, gap, detail)


# ------------------------------------------------------------ functional-inequality constants


def poincare_ratio(phi, dx: float) -> float:
    """int phi^4 / int phi_x^4 for a field vanishing at both ends."""
    phi = np.asarray(phi, dtype=float)
    px = np.diff(phi) / dx
    num = trapezoid_values(phi**4, dx)
    den = float(np.sum(px**4) * dx)
    return float(num / den)


def gagliardo_nirenberg_ratio(phi, dx: float) -> float:
    """int phi^4 / (|phi_x| |phi|^3 + |phi|^4) with L2 norms."""
    phi = np.asarray(phi, dtype=float)
    px = np.diff(phi) / dx
    l2 = math.sqrt(trapezoid_values(phi**2, dx))
    l2x = math.sqrt(float(np.sum(px**2) * dx))
    return float(trapezoid_values(phi**4, dx) / (l2x * l2**3 + l2**4))
