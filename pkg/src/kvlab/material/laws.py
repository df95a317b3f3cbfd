"""Coefficient laws gamma, Gamma, f, F and checks of their hypotheses."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import LawDomainError, LawExpr, eval_law, parse_law

F_ZERO_TOL = 1e-12


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialSet:
    """The four coefficient laws plus their declared bounds.

    ``lip_gamma`` and ``lip_f`` are user-declared bounds on sup|gamma'| and
    sup|f'|; sampling can only estimate them.
    """

    gamma: LawExpr
    Gamma: LawExpr
    f: LawExpr
    F: LawExpr
    gamma_lo: float
    gamma_hi: float
    C_F: float
    alpha: float
    lip_gamma: float = 0.0
    lip_f: float = 0.0

    def __post_init__(self):
        for name in ("gamma_lo", "gamma_hi", "C_F", "alpha", "lip_gamma", "lip_f"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise MaterialError(f"{name} must be finite, got {value}")
        if not self.gamma_lo > 0:
            raise MaterialError("gamma_lo must be positive")
        if self.gamma_lo > self.gamma_hi:
            raise MaterialError("gamma_lo must not exceed gamma_hi")
        if not self.C_F > 0:
            raise MaterialError("C_F must be positive")
        if not 0 < self.alpha < 1:
            raise MaterialError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lip_gamma < 0 or self.lip_f < 0:
            raise MaterialError("declared Lipschitz bounds must be nonnegative")

    def coefficients(self, theta):
        """Evaluate (gamma, Gamma, f, F) at temperatures ``theta``."""
        return (
            eval_law(self.gamma, theta),
            eval_law(self.Gamma, theta),
            eval_law(self.f, theta),
            eval_law(self.F, theta),
        )


def law_derivative(law: LawExpr, s, rel_step: float = 1e-6):
    """Finite-difference derivative of ``law`` on s >= 0.

    Central differences where the stencil stays in [0, inf), second-order
    forward differences otherwise.
    """
    s = np.asarray(s, dtype=float)
    h = rel_step * (1.0 + np.abs(s))
    central = s - h >= 0
    out = np.empty_like(s)
    if np.any(central):
        sc, hc = s[central], h[central]
        out[central] = (eval_law(law, sc + hc) - eval_law(law, sc - hc)) / (2 * hc)
    fwd = ~central
    if np.any(fwd):
        sf, hf = s[fwd], h[fwd]
        out[fwd] = (
            -3 * eval_law(law, sf) + 4 * eval_law(law, sf + hf) - eval_law(law, sf + 2 * hf)
        ) / (2 * hf)
    return out


# ------------------------------------------------------------ validation


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    bound: str
    witness_s: float | None = None
    witness_value: float | None = None
    advisory: bool = False
    detail: str = ""


@dataclass
class ValidationReport:
    s_max: float
    n_samples: int
    checks: list = field(default_factory=list)
    lip_gamma_est: float = float("nan")
    lip_f_est: float = float("nan")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def check(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"material validation on [0, {self.s_max:g}] with {self.n_samples} samples"]
        for c in self.checks:
            verdict = "pass" if c.passed else ("warn" if c.advisory else "FAIL")
            line = f"  {c.name:<12} {verdict:<4}  {c.bound}"
            if not c.passed:
                line += f"  (witness s={c.witness_s:.6g}, value={c.witness_value:.6g})"
            if c.detail:
                line += f"  {c.detail}"
            lines.append(line)
        lines.append(f"  sampled sup|gamma'| = {self.lip_gamma_est:.6g}")
        lines.append(f"  sampled sup|f'|     = {self.lip_f_est:.6g}")
        lines.append("overall: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["hypothesis", "verdict", "advisory", "bound", "witness_s", "witness_value", "s_max", "n_samples"]
        )
        for c in self.checks:
            writer.writerow(
                [
                    c.name,
                    "pass" if c.passed else "fail",
                    int(c.advisory),
                    c.bound,
                    "" if c.witness_s is None else repr(c.witness_s),
                    "" if c.witness_value is None else repr(c.witness_value),
                    repr(self.s_max),
                    self.n_samples,
                ]
            )
        return buf.getvalue()


def sample_points(s_max: float, n_samples: int):
    """Grid of [0, s_max] uniform in log(1 + s); dense near 0, exact endpoints."""
    s = np.expm1(np.linspace(0.0, math.log1p(s_max), n_samples))
    s[0], s[-1] = 0.0, s_max
    return s


def _safe_eval(law, s):
    """Vectorised evaluation; on failure find the first offending sample."""
    try:
        return eval_law(law, s), None
    except LawDomainError:
        for x in s:
            try:
                eval_law(law, float(x))
            except LawDomainError as exc:
                return None, (float(x), str(exc))
        raise


def _sampled_sup_derivative(s, values):
    # centered differences on the (nonuniform) sample grid, one-sided at the ends
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (s[2:] - s[:-2])
    d[0] = (values[1] - values[0]) / (s[1] - s[0])
    d[-1] = (values[-1] - values[-2]) / (s[-1] - s[-2])
    return float(np.max(np.abs(d)))


def _bound_check(name, bound, s, excess):
    """``excess`` > 0 marks a violation; the witness is the worst sample."""
    k = int(np.argmax(excess))
    if excess[k] > 0:
        return HypothesisCheck(name, False, bound, float(s[k]), float(excess[k]))
    return HypothesisCheck(name, True, bound)


def validate_material(m: MaterialSet, s_max: float = 100.0, n_samples: int = 2001) -> ValidationReport:
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    s_max = float(s_max)
    s = sample_points(s_max, n_samples)
    report = ValidationReport(s_max, n_samples)
    values = {}
    for name in ("gamma", "Gamma", "f", "F"):
        vals, failure = _safe_eval(getattr(m, name), s)
        if failure is not None:
            report.checks.append(
                HypothesisCheck(f"{name}_eval", False, "finite on window", failure[0], float("nan"), detail=failure[1])
            )
        values[name] = vals

    g, G, F = values["gamma"], values["Gamma"], values["F"]
    if g is not None:
        report.checks.append(_bound_check("gamma_lo", f"gamma(s) >= {m.gamma_lo:g}", s, m.gamma_lo - g))
        report.checks.append(_bound_check("gamma_hi", f"gamma(s) <= {m.gamma_hi:g}", s, g - m.gamma_hi))
    if G is not None:
        report.checks.append(_bound_check("Gamma_lo", "Gamma(s) >= 0", s, -G))
        report.checks.append(_bound_check("Gamma_hi", f"Gamma(s) <= {m.gamma_hi:g}", s, G - m.gamma_hi))
    if F is not None:
        f0 = abs(float(F[0]))
        if f0 <= F_ZERO_TOL:
            report.checks.append(HypothesisCheck("F_zero", True, "|F(0)| <= 1e-12"))
        else:
            report.checks.append(HypothesisCheck("F_zero", False, "|F(0)| <= 1e-12", 0.0, f0))
        growth = m.C_F * (1.0 + s) ** m.alpha
        report.checks.append(
            _bound_check("F_growth", f"|F(s)| <= {m.C_F:g}(1+s)^{m.alpha:g}", s, np.abs(F) - growth)
        )

    for name, declared, attr in (("lip_gamma", m.lip_gamma, "lip_gamma_est"), ("lip_f", m.lip_f, "lip_f_est")):
        vals = values["gamma" if name == "lip_gamma" else "f"]
        if vals is None:
            continue
        est = _sampled_sup_derivative(s, vals)
        setattr(report, attr, est)
        # sampling cannot prove a sup, so an excess is only a warning
        tol = 1e-9 * (1.0 + declared)
        check = HypothesisCheck(name, est <= declared + tol, f"sampled sup <= declared {declared:g}", advisory=True)
        if not check.passed:
            check.witness_s = float(s[int(np.argmax(np.abs(np.gradient(vals, s))))])
            check.witness_value = est
        report.checks.append(check)
    return report


# ------------------------------------------------------------ families


def builtin_family(name: str, **params) -> MaterialSet:
    """Canonical materials whose declared bounds are exact.

    ``affine_tanh(gamma0, delta, C_F=1, alpha=0.5)``
        gamma = gamma0 + delta*tanh(s), Gamma = gamma0,
        f = delta*s/(1+s)^(1-alpha), F = C_F((1+s)^alpha - 1).
    ``power_sublinear(C_F, alpha, gamma0=1)``
        constant gamma = Gamma = gamma0, f = 0, F = C_F((1+s)^alpha - 1).
    ``constant(c, C_F=1, alpha=0.5)``
        gamma = Gamma = c, f = 0, F as above.
    """
    C_F = float(params.pop("C_F", 1.0))
    alpha = float(params.pop("alpha", 0.5))
    if not 0 < alpha < 1:
        raise MaterialError(f"alpha must lie in (0, 1), got {alpha}")
    F = parse_law(f"{C_F!r}*((1+s)^{alpha!r} - 1)")
    if name == "affine_tanh":
        gamma0 = float(params.pop("gamma0"))
        delta = float(params.pop("delta"))
        _no_extra(name, params)
        if delta < 0:
            raise MaterialError("delta must be nonnegative")
        if not gamma0 > 0:
            raise MaterialError("gamma0 must be positive")
        return MaterialSet(
            gamma=parse_law(f"{gamma0!r} + {delta!r}*tanh(s)"),
            Gamma=parse_law(repr(gamma0)),
            f=parse_law(f"{delta!r}*s/(1+s)^{1 - alpha!r}"),
            F=F,
            gamma_lo=gamma0,
            gamma_hi=gamma0 + delta,
            C_F=C_F,
            alpha=alpha,
            lip_gamma=delta,
            lip_f=delta,
        )
    if name == "power_sublinear":
        gamma0 = float(params.pop("gamma0", 1.0))
        _no_extra(name, params)
        return _constant_material(gamma0, F, C_F, alpha)
    if name == "constant":
        c = float(params.pop("c"))
        _no_extra(name, params)
        return _constant_material(c, F, C_F, alpha)
    raise MaterialError(f"unknown family {name!r}")


def _constant_material(c, F, C_F, alpha):
    if not c > 0:
        raise MaterialError("constant coefficient must be positive")
    law = parse_law(repr(c))
    return MaterialSet(law, law, parse_law("0"), F, c, c, C_F, alpha, 0.0, 0.0)


def _no_extra(name, params):
    if params:
        raise MaterialError(f"unexpected parameters for {name}: {sorted(params)}")
