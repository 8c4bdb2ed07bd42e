"""Regenerate ``liouvillian_golden.txt`` from an independent symbolic
transcription of the generator, evaluated with sympy at 30 digits.

    python tests/data/generate_liouvillian_golden.py
"""
from pathlib import Path

import sympy as sp

# golden point
T_c0, T_h0, T_l = sp.Rational(6, 10), sp.Rational(16, 10), sp.Rational(7, 10)
phi, p_h, p_c = sp.pi / 2, sp.Rational(3, 10), sp.Rational(6, 10)
A0, w, t, lam = sp.Rational(7, 1000), sp.Rational(7, 10), sp.Integer(0), sp.Rational(1, 100)
E1, Eb, Ea, r, g = sp.Rational(1, 10), sp.Rational(3, 10), sp.Rational(3, 2), sp.Integer(5), sp.Integer(10)

Tc = T_c0 - A0 * sp.sin(w * t)
Th = T_h0 - A0 * sp.sin(w * t + phi)
nc = 1 / (sp.exp((Eb - E1) / Tc) - 1)
nh = 1 / (sp.exp((Ea - E1) / Th) - 1)
nl = 1 / (sp.exp((Ea - Eb) / T_l) - 1)
tnc, tnh, tnl = nc + 1, nh + 1, 1 + nl
n = -(nc + nh)
y = -(nc * p_c + nh * p_h)

M = r * sp.Matrix([
    [n, 0, tnh, tnc, y],
    [0, n, tnh, tnc, y],
    [nh, nh, (-g**2 * tnl - 2 * r * tnh) / r, g**2 * nl * sp.exp(-lam) / r, 2 * p_h * nh],
    [nc, nc, g**2 * tnl * sp.exp(lam) / r, (-g**2 * nl - 2 * r * tnc) / r, 2 * p_c * nc],
    [y / 2, y / 2, p_h * tnh, p_c * tnc, n],
])

lines = [
    "# dressed generator golden values, 15 significant digits, row-major",
    "# T_c0=0.6 T_h0=1.6 T_l=0.7 phi=pi/2 p_h=0.3 p_c=0.6 A0=0.007 omega=0.7 t=0 lambda=0.01",
    "# E1=E2=0.1 Eb=0.3 Ea=1.5 r=5 g=10",
]
for i in range(5):
    lines.append(" ".join(f"{float(sp.N(M[i, j], 30)):.14e}" for j in range(5)))
Path(__file__).with_name("liouvillian_golden.txt").write_text("\n".join(lines) + "\n")
