"""Independent symbolic oracle for the closed-form values frozen into the C++ tests.

Run with: python3 tests/oracles/derive_values.py
"""
import sympy as sp

x, y, t, a, b = sp.symbols("x y t a beta", real=True)
r2 = x**2 + y**2

# Cap family: g = e^{2u} g0 with u = log(2/(1 + t r^2)).
u = sp.log(2 / (1 + t * r2))
lap = sp.diff(u, x, 2) + sp.diff(u, y, 2)
K = sp.simplify(-sp.exp(-2 * u) * lap)
print("cap K =", K)
# Boundary geodesic curvature e^{-u}(1 + du/dnu) on r = 1.
dnu = x * sp.diff(u, x) + y * sp.diff(u, y)
k = sp.simplify((sp.exp(-u) * (1 + dnu)).subs({x: 1, y: 0}))
print("cap k =", k)
for tv in [sp.Rational(1, 4), sp.Rational(1, 2), 1]:
    print("  t=", tv, " K=", K.subs(t, tv), " k=", k.subs(t, tv))
# Gauss-Bonnet pieces for cap(t): area integral of K e^{2u} over the unit disc + k * length.
rr, th = sp.symbols("r theta", positive=True)
area = sp.integrate(sp.integrate((K * sp.exp(2 * u)).subs({x: rr, y: 0}) * rr, (rr, 0, 1)), (th, 0, 2 * sp.pi))
length = 2 * sp.pi * sp.exp(u).subs({x: 1, y: 0})
print("cap GB total =", sp.simplify(area + k * length))

# Radial oracle map psi_a(z) = z (a + (1-a)|z|^2).
z, zb = sp.symbols("z zb")
psi = z * (a + (1 - a) * z * zb)
pz, pzb = sp.diff(psi, z), sp.diff(psi, zb)
print("psi_a: w_z =", pz, " w_zbar =", pzb, " mu =", sp.simplify(pzb / pz))
jac = sp.expand((a + 2 * (1 - a) * rr**2) ** 2 - (1 - a) ** 2 * rr**4)
print("psi_a jacobian(r) =", jac, " at r=0:", jac.subs(rr, 0), " a=0.7:", jac.subs({rr: 0, a: sp.Rational(7, 10)}))
s = sp.symbols("s", positive=True)
root = sp.nsolve(s * (sp.Rational(7, 10) + sp.Rational(3, 10) * s**2) - sp.Rational(7, 10), s, 0.9)
print("psi_0.7^{-1}(0.7) =", root)

# Twist oracle map psi_beta(z) = z exp(2 i beta x y) = z exp(beta (z^2 - zb^2)/2).
psib = z * sp.exp(b * (z**2 - zb**2) / 2)
mub = sp.simplify(sp.diff(psib, zb) / sp.diff(psib, z))
print("psi_beta mu =", mub)

# Metric decomposition values.
g11, g12, g22 = 4, 0, 1
rho = (g11 + g22) + 2 * sp.sqrt(g11 * g22 - g12**2)
print("diag(4,1): rho =", rho, " mu =", sp.Rational(g11 - g22, 1) / rho)
for m in [sp.Rational(1, 3), sp.I / 2]:
    print("metric_from_mu(", m, "):", sp.simplify(sp.Abs(1 + m) ** 2), sp.simplify(sp.Abs(1 - m) ** 2),
          sp.simplify(sp.I * (sp.conjugate(m) - m)))
print("hemisphere factor at 0:", sp.log(2), float(sp.log(2)))
print("d/dx log(1+r^2) at (1,0):", sp.diff(sp.log(1 + r2), x).subs({x: 1, y: 0}))
print("cayley(i), cayley(0), cayley(1):", [sp.simplify(-(w - sp.I) / (w + sp.I)) for w in (sp.I, 0, 1)])
print("inscribed polygon area deficit ~", sp.series(sp.pi - (th / 2) * sp.sin(2 * sp.pi / th), th, sp.oo, 3))
