"""Independent oracles for frozen expected values used by the C++ unit tests.

Run with `python3 tests/oracles/derive_expected.py`; values are copied into the
tests verbatim. Nothing here imports the library under test.
"""
import math

import mpmath as mp
from scipy import integrate

mp.mp.dps = 30


def disk_field_quadrature(x, radius=1.0, rho0=1.0):
    # E(x) = int_{|z|<R} rho0 (x - z) / |x - z|^2 dz, polar coordinates about x
    # would be singular-free, but we integrate about the disk center instead and
    # split the angular range so dblquad never samples z == x.
    def integrand_x(theta, r):
        zx, zy = r * math.cos(theta), r * math.sin(theta)
        dx, dy = x[0] - zx, x[1] - zy
        return rho0 * dx / (dx * dx + dy * dy) * r

    val, _ = integrate.dblquad(integrand_x, 0.0, radius, 0.0, 2 * math.pi,
                               epsabs=1e-11, epsrel=1e-11)
    return val


print("disk field (0.5,0):", disk_field_quadrature((0.5, 0.0)), "vs pi/2", math.pi / 2)
print("disk field (2,0):  ", disk_field_quadrature((2.0, 0.0)), "vs pi/4", math.pi / 4)

ln9 = mp.log(9)
print("log2lip sin ratio y=0 h=1/9:", mp.sin(mp.mpf(1) / 9) / ((mp.mpf(1) / 9) * ln9 ** 2))
print("psi_1(1/9):", (mp.mpf(1) / 9) * ln9 ** 2)
print("psi_1(0.01):", mp.mpf("0.01") * mp.log(100) ** 2)
print("psi_inf(5):", ln9 / 9)
print("phi_1(1):", mp.e - 1)
print("g_closed a=1 A=e^-10 c=1 t=1:", 10 * mp.exp(-1))
print("t_star a=1 A=e^-10 c=1:", mp.log(10 / ln9))
print("t_star a=inf A=e^-16 c=1:", 2 * (4 - mp.sqrt(ln9)))
print("envelope_w1 a=inf B=1e-8 C=c=1 t=1:", mp.sqrt(mp.mpf("1e-8")) * mp.e * (1 + abs(mp.log(mp.mpf("1e-8")))))
print("envelope_x a=1 X0+V0=1e-6 c=1 t=1:", mp.exp(mp.log(mp.mpf("2e-6")) * mp.exp(-1)))
print("moment_M |v|=1 d=2 a=1 c=0.5:", mp.exp(2))
print("luxemburg uniform cell:", 1 / mp.log(2))

# g_closed for alpha=2 (beta=1.5, gamma=4), A=e^-16, c=0.5, t=1, via an
# independent high-precision ODE solve of G' = -c G^{beta/2}.
sol = mp.odefun(lambda t, g: -mp.mpf("0.5") * g ** mp.mpf("0.75"), 0, mp.mpf(16))
print("G alpha=2 ode t=1:", sol(1), " closed:", (16 ** 0.25 - 0.5 / 4 * 1) ** 4)

# Verlet on E(x) = -x, one step from (1,0) with dt=0.1
dt = 0.1
x, v = 1.0, 0.0
vh = v + 0.5 * dt * (-x)
x1 = x + dt * vh
v1 = vh + 0.5 * dt * (-x1)
print("verlet harmonic:", x1, v1)

# borderline-orlicz mass: 2*pi*int_0^{1/2} |ln r|^{1/alpha} r dr
for a in (1, 2):
    m = mp.quad(lambda r: 2 * mp.pi * abs(mp.log(r)) ** (mp.mpf(1) / a) * r, [0, 0.5])
    print("borderline mass d=2 r0=1/2 alpha=", a, m)
m3 = mp.quad(lambda r: 4 * mp.pi * abs(mp.log(r)) * r * r, [0, 0.5])
print("borderline mass d=3 r0=1/2 alpha=1", m3)

# Kernel-estimate LHS, int |K(x-z) - K(y-z)| g(z) dz in d = 2 with the
# midpoint of x, y at the density centre. By the reflection symmetry it is
# twice the integral over the half-plane nearer x, done here in polar
# coordinates about x, where the r Jacobian cancels the 1/r singularity.
def kernel_lhs_oracle(g, R, r0=0.5):
    h = R / 2

    def integrand(r, phi):
        zx, zy = h + r * math.cos(phi), r * math.sin(phi)  # z relative to midpoint
        px, py = h - zx, -zy
        qx, qy = -h - zx, -zy
        pp, qq = px * px + py * py, qx * qx + qy * qy
        dx, dy = px / pp - qx / qq, py / pp - qy / qq
        return r * math.hypot(dx, dy) * g(math.hypot(zx, zy))

    def r_hi(phi):
        c, s = math.cos(phi), math.sin(phi)
        edge = -h * c + math.sqrt(r0 * r0 - h * h * s * s)
        if c < 0:
            edge = min(edge, h / -c)
        return edge

    total = 0.0
    for a, b in ((0, math.pi / 2), (math.pi / 2, math.pi)):
        val, _ = integrate.dblquad(integrand, a, b, 0.0, r_hi, epsabs=1e-13, epsrel=1e-10)
        total += val
    return 4 * total  # upper and lower quarter-planes, then both half-planes


uniform = lambda r: 1 / (math.pi * 0.25) if r < 0.5 else 0.0
border1 = lambda r: abs(math.log(r)) if 0 < r < 0.5 else 0.0
for R in (1e-2, 1e-3):
    print("kernel lhs uniform R=", R, repr(kernel_lhs_oracle(uniform, R)))
    print("kernel lhs borderline(1) R=", R, repr(kernel_lhs_oracle(border1, R)))
