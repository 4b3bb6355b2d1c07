"""Manufactured trig solution on the straight channel (0,1) x (-1/2,1/2).

The velocity is the fully developed parabola plus a curl-form perturbation
whose stream function vanishes to second order at the outlet, so the
natural traction there reduces to a scalar and the outflow stays
unidirectional (the directional term is inactive at the exact solution).
The forcing comes from a symbolic momentum balance and is emitted in the
case-file expression language.
"""

import sympy as sym

X, Y = sym.symbols("x y")

ETA = sym.Rational(1, 2)
PHI = sym.Rational(1, 2)
H = sym.Rational(1, 2)
EPS = sym.Rational(1, 5)

_PSI = EPS * sym.sin(sym.pi * (1 - X)) ** 3 * sym.cos(sym.pi * Y) ** 2
_BASE = 3 * PHI / (4 * H**3) * (H**2 - Y**2)

U1 = _BASE + sym.diff(_PSI, Y)
U2 = -sym.diff(_PSI, X)
P = sym.Rational(3, 10) * sym.cos(sym.pi * X) * sym.sin(sym.pi * Y) + 3 * ETA * PHI / (2 * H**3) * (1 - X)


def _momentum(u1, u2, p):
    f1 = (-ETA * (sym.diff(u1, X, 2) + sym.diff(u1, Y, 2))
          + u1 * sym.diff(u1, X) + u2 * sym.diff(u1, Y) + sym.diff(p, X))
    f2 = (-ETA * (sym.diff(u2, X, 2) + sym.diff(u2, Y, 2))
          + u1 * sym.diff(u2, X) + u2 * sym.diff(u2, Y) + sym.diff(p, Y))
    return sym.expand(f1), sym.expand(f2)


def _fmt(expr) -> str:
    return str(expr).replace("**", "^")


def case_text(target_h: float = 0.12, directory: str = "out") -> str:
    f1, f2 = _momentum(U1, U2, P)
    sigma = sym.simplify(ETA * sym.diff(U1, X).subs(X, 1) - P.subs(X, 1))
    grads = [sym.diff(U1, X), sym.diff(U1, Y), sym.diff(U2, X), sym.diff(U2, Y)]
    # inflow trace: the perturbation vanishes at x = 0, so this is the parabola
    g1 = sym.expand(U1.subs(X, 0))
    return f"""\
[domain]
kind = straight
inlet_length = 0.25
outlet_length = 0.75
half_height_in = 0.5

[mesh]
target_h = {target_h!r}

[physics]
eta = {float(ETA)!r}
f = ({_fmt(f1)}, {_fmt(f2)})
g_star = ({_fmt(g1)}, 0)
sigma_star = {_fmt(sigma)}

[solver]
linearization = picard_then_newton

[outputs]
directory = {directory}
write_vtk = false
write_mesh = false

[exact]
velocity = ({_fmt(U1)}, {_fmt(U2)})
pressure = {_fmt(P)}
velocity_grad = ({_fmt(grads[0])}, {_fmt(grads[1])}, {_fmt(grads[2])}, {_fmt(grads[3])})
"""


if __name__ == "__main__":
    import sys

    print(case_text(*(float(a) if i == 0 else a for i, a in enumerate(sys.argv[1:]))), end="")
