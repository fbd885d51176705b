"""High-precision moments from the linear Heisenberg equations of one photon block.

For ``H = Omega c.dag c + (w/4)(c^2 + c.dag^2) + g (c + c.dag)`` the operators
``(c, c.dag, 1)`` obey ``dX/dt = M X`` with a constant 3x3 ``M``; solving it
gives ``c(t) = u c + v c.dag + s`` and hence every vacuum moment. The drive
``s`` is linear in the photon number, so the Poisson average is exact.
This is independent of both the closed forms and the truncated-basis oracle.
"""
import mpmath

DPS = 40


def heisenberg_moments(params, alpha_sq, tau, dps=DPS):
    """``(<c>, <c^2>, <c.dag c>)`` of the reduced Bogoliubov state at ``tau``."""
    with mpmath.workdps(dps):
        omega = mpmath.mpf(params.omega_c)
        w = mpmath.mpf(params.omega_sw)
        g = mpmath.sqrt(2) / 2 * mpmath.mpf(params.zeta)
        t = mpmath.mpf(tau) / mpmath.mpf(params.omega_c_prime)
        m = -1j * mpmath.matrix([[omega, w / 2, g], [-w / 2, -omega, -g], [0, 0, 0]])
        prop = mpmath.expm(m * t)
        u, v, s1 = prop[0, 0], prop[0, 1], prop[0, 2]
        a2 = mpmath.mpf(alpha_sq)
        e_n, e_n2 = a2, a2 + a2**2
        c_mean = s1 * e_n
        c_sq = u * v + s1**2 * e_n2
        n_mean = abs(v) ** 2 + abs(s1) ** 2 * e_n2
        return complex(c_mean), complex(c_sq), float(n_mean)


def heisenberg_squeezing(params, alpha_sq, tau, dps=DPS):
    c_mean, c_sq, n_mean = heisenberg_moments(params, alpha_sq, tau, dps)
    anom = 2 * (c_sq - c_mean**2).real
    normal = 2 * (n_mean - abs(c_mean) ** 2)
    return anom + normal, -anom + normal
