#!/usr/bin/env python3
"""Independent reference for the built-in closed loops.

Integrates the regulator equations with scipy's DOP853 at tight tolerances and
compares the final state against the trajectory CSV written by `invreg run`.
"""

import argparse
import csv
import pathlib
import subprocess
import sys
import tempfile

import numpy as np
from scipy.integrate import solve_ivp


def scalar_model():
    m = {
        "n": 1, "d": 1,
        "f": lambda x: np.array([x[0]]),
        "gu": np.array([[1.0]]),
        "phi": lambda x: np.array([[x[0]]]),
        "dphi": lambda x, v: np.array([[v[0]]]),
        "lip": lambda x, xi: np.array([1.0]),
        "S": lambda th: np.zeros(1),
        "H": np.eye(1),
        "u0": lambda x: np.array([-2.0 * x[0]]),
        "kappa": lambda x: 1.0,
        "dkappa": lambda x, v: 0.0,
        "x0": [1.0], "theta0": [2.0], "theta_hat0": [0.0], "xi0": [0.0], "nu0": [0.0],
    }
    return m


def hopf_model(omega):
    def psi(x):
        return x[0] ** 2 + x[1] ** 2 - 1.0

    skew = np.array([[0.0, omega], [-omega, 0.0]])
    return {
        "n": 2, "d": 2,
        "f": lambda x: np.array([-x[1] - psi(x) * x[0], x[0]]),
        "gu": np.array([[0.0], [1.0]]),
        "phi": lambda x: np.array([[x[0], x[1]]]),
        "dphi": lambda x, v: np.array([[v[0], v[1]]]),
        "lip": lambda x, xi: np.array([1.0]),
        "S": lambda th: skew @ th,
        "H": np.eye(2),
        "u0": lambda x: np.array([-psi(x) * x[1]]),
        "kappa": lambda x: 2.0 * np.linalg.norm(x) + 1.0,
        "dkappa": lambda x, v: 2.0 * float(x @ v) / np.linalg.norm(x),
        "x0": [2.0, 0.0], "theta0": [0.5, -0.5], "theta_hat0": [0.0, 0.0],
        "xi0": [1.5, 0.5], "nu0": [0.0, 0.0],
    }


class ClosedLoop:
    def __init__(self, model, kappa_zero):
        self.m = model
        self.kz = kappa_zero
        self.hinv = np.linalg.inv(model["H"])

    def kappa(self, xi):
        return 0.0 if self.kz else self.m["kappa"](xi)

    def alpha(self, x):
        return self.m["gu"] @ self.m["phi"](x)

    def big_psi(self, xi):
        k = self.kappa(xi)
        return (k * k + 1.0) * self.alpha(xi).T

    def d_big_psi(self, xi, v):
        k = self.kappa(xi)
        dk = 0.0 if self.kz else self.m["dkappa"](xi, v)
        d_alpha = self.m["gu"] @ self.m["dphi"](xi, v)
        return 2.0 * k * dk * self.alpha(xi).T + (k * k + 1.0) * d_alpha.T

    def theta_hat(self, x, xi, theta_hat_i):
        return self.hinv @ self.big_psi(xi) @ x + theta_hat_i

    def split(self, y):
        n, d = self.m["n"], self.m["d"]
        parts = np.split(y, np.cumsum([n, d, d, n]))
        return parts  # x, theta, theta_hat_i, xi, nu

    def initial(self):
        m = self.m
        x0, xi0 = np.array(m["x0"]), np.array(m["xi0"])
        ti0 = np.array(m["theta_hat0"]) - self.hinv @ self.big_psi(xi0) @ x0
        return np.concatenate([x0, m["theta0"], ti0, xi0, m["nu0"]])

    def rhs(self, _t, y):
        m = self.m
        x, theta, ti, xi, nu = self.split(y)
        th = self.theta_hat(x, xi, ti)
        u = m["u0"](x) - m["phi"](xi) @ th
        f0 = m["f"](x) + m["gu"] @ m["u0"](x)
        k = self.kappa(xi)
        lam = 1.0 + float(np.sum(m["lip"](x, xi) ** 2)) * (1.0 + k * k)
        xi_dot = m["f"](x) + m["gu"] @ u + lam * (x - xi) + self.alpha(x) @ nu
        nu_dot = m["S"](nu) + self.hinv @ self.alpha(x).T @ (x - xi)
        ti_dot = m["S"](th) - self.hinv @ (self.d_big_psi(xi, xi_dot) @ x + self.big_psi(xi) @ f0)
        x_dot = m["f"](x) + m["gu"] @ (m["phi"](x) @ theta + u)
        return np.concatenate([x_dot, m["S"](theta), ti_dot, xi_dot, nu_dot])


CASES = {
    "scalar-equilibrium": (scalar_model(), False, 10.0),
    "hopf-circle": (hopf_model(0.0), False, 20.0),
    "hopf-circle-drift": (hopf_model(0.5), False, 20.0),
    "hopf-circle-kappa-zero": (hopf_model(0.0), True, 20.0),
}


def last_row(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [float(v) for v in rows[-1]]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cli", required=True, help="path to the invreg executable")
    parser.add_argument("--configs", required=True, help="directory with scenario configs")
    parser.add_argument("--tol", type=float, default=1e-7)
    args = parser.parse_args()

    failures = 0
    with tempfile.TemporaryDirectory() as out:
        for name, (model, kappa_zero, t_end) in CASES.items():
            config = pathlib.Path(args.configs) / f"{name}.json"
            subprocess.run([args.cli, "run", str(config), "--t-end", str(t_end), "--out", out],
                           check=False, stderr=subprocess.DEVNULL)
            header, row = last_row(pathlib.Path(out) / f"{name}.csv")
            loop = ClosedLoop(model, kappa_zero)
            sol = solve_ivp(loop.rhs, (0.0, t_end), loop.initial(), method="DOP853",
                            rtol=1e-12, atol=1e-13)
            x, theta, ti, xi, nu = loop.split(sol.y[:, -1])
            expected = {"x": x, "theta_hat": loop.theta_hat(x, xi, ti), "xi": xi, "nu": nu}
            worst = 0.0
            for key, values in expected.items():
                for i, v in enumerate(values):
                    got = row[header.index(f"{key}_{i + 1}")]
                    worst = max(worst, abs(got - v) / max(1.0, abs(v)))
            ok = row[0] == t_end and worst <= args.tol
            failures += not ok
            print(f"{'PASS' if ok else 'FAIL'} {name}: max relative deviation {worst:.3g}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
