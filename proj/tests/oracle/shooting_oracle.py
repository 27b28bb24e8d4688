"""Shooting oracle for the HJB equation, independent of the closed form.

Below the dividend threshold the HJB equation is solved for V'' pointwise
(risk level clamped to [alpha, beta]) and integrated from V(0)=0, V'(0)=s
until V'=1. Above the threshold the bounded solution is M/gamma + K e^{r(x-x1)}
with r the negative root at the tail's own feedback level z = -mu/(sigma^2 r)
clamped to [alpha, beta]. The slope s is found by root finding on the value
mismatch at x1.

Run: python3 shooting_oracle.py > frozen.json
"""

import json
import math
import sys

from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def tail_level(p):
    mu, sig, dl, g, a, b, M = p

    def neg_root(z):
        A = 0.5 * sig**2 * z**2
        B = z * mu - dl - M
        return (-B - math.sqrt(B * B + 4 * A * g)) / (2 * A)

    def mismatch(z):
        return -mu / (sig**2 * neg_root(z)) - z

    if mismatch(a) <= 0:
        z = a
    elif mismatch(b) >= 0:
        z = b
    else:
        z = brentq(mismatch, a, b, xtol=1e-15, rtol=1e-15)
    return z, neg_root(z)


def second_derivative(p, V, dV):
    mu, sig, dl, g, a, b, M = p
    # interior maximizer: a = 2(delta V' + gamma V)/(mu V')
    a_int = 2 * (dl * dV + g * V) / (mu * dV)
    z = min(max(a_int, a), b)
    if z == a_int:
        return -(mu**2) * dV**2 / (2 * sig**2 * (dl * dV + g * V)), z
    return 2 * (g * V - (z * mu - dl) * dV) / (sig**2 * z**2), z


def shoot(p, s, x_max):
    def rhs(x, y):
        return [y[1], second_derivative(p, y[0], y[1])[0]]

    def hit_one(x, y):
        return y[1] - 1.0

    hit_one.terminal = True
    hit_one.direction = -1
    sol = solve_ivp(rhs, (0.0, x_max), [0.0, s], method="DOP853", rtol=1e-13, atol=1e-14,
                    events=hit_one, dense_output=True)
    if sol.t_events[0].size == 0:
        return None, sol
    return sol.t_events[0][0], sol


def solve(p):
    mu, sig, dl, g, a, b, M = p
    z, r = tail_level(p)
    # x1 = 0 when the tail alone starts at slope <= 1
    if -(M / g) * r <= 1.0:
        return {"x1": 0.0, "tail_level": z, "tail_rate": r, "slope0": -(M / g) * r}

    target_gap = lambda V1: V1 - (M / g + 1.0 / r)

    def gap(s):
        x1, sol = shoot(p, s, 200.0)
        if x1 is None:
            return 1e3
        return target_gap(sol.sol(x1)[0])

    lo, hi = 1.0 + 1e-9, 2.0
    while gap(hi) < 0:
        hi *= 2
    s = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=400)
    x1, sol = shoot(p, s, 200.0)
    out = {"x1": x1, "tail_level": z, "tail_rate": r, "slope0": s}
    probes = [0.25 * x1, 0.5 * x1, 0.75 * x1]
    out["probes"] = [[x, sol.sol(x)[0]] for x in probes]
    # first points where the feedback level reaches alpha from below / beta
    xs = [x1 * i / 20000 for i in range(20001)]
    levels = [second_derivative(p, *sol.sol(x))[1] for x in xs]
    out["risk_at_0"] = levels[0]
    above_alpha = next((x for x, l in zip(xs, levels) if l > a + 1e-12), None)
    at_beta = next((x for x, l in zip(xs, levels) if l >= b - 1e-12), None)
    out["x_alpha_approx"] = above_alpha
    out["x_beta_approx"] = at_beta
    return out


CASES = {
    "low_beta_tail": (2, 1, 0.5, 0.1, 1, 2, 2.4),
    "low_saturated": (2, 1, 0.5, 0.1, 1, 2, 1.0),
    "low_alpha_threshold": (2, 1, 0.5, 0.1, 1, 2, 0.2),
    "mid_beta_tail": (2, 1, 1.2, 0.1, 1, 2, 2.0),
    "mid_saturated": (2, 1, 1.2, 0.1, 1, 2, 0.5),
    "high_beta_threshold": (1, 1, 0.8, 0.1, 1, 1.5, 0.3),
    "s1_mid_beta_tail": (1, 1, 1, 0.5, 1.5, 3, 3.0),
    "s2_high_beta_threshold": (1, 1, 1, 0.5, 1.2, 1.8, 1.5),
}

if __name__ == "__main__":
    result = {name: solve(p) for name, p in CASES.items()}
    json.dump(result, sys.stdout, indent=1)
    print()
