"""Fixed-step explicit integrators on flat float lists.

The plant state is small (12 floats), so plain Python lists beat numpy here
by a wide margin: array creation overhead dominates for vectors this short.
"""


def rk4(f, t, x, dt):
    """One classical Runge-Kutta step of ``xdot = f(t, x)``."""
    h2 = 0.5 * dt
    k1 = f(t, x)
    k2 = f(t + h2, [xi + h2 * ki for xi, ki in zip(x, k1)])
    k3 = f(t + h2, [xi + h2 * ki for xi, ki in zip(x, k2)])
    k4 = f(t + dt, [xi + dt * ki for xi, ki in zip(x, k3)])
    h6 = dt / 6.0
    return [
        xi + h6 * (a + 2.0 * b + 2.0 * c + d)
        for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
    ]


def integrate(f, t0, x0, dt, n_steps):
    """Apply :func:`rk4` ``n_steps`` times and return the final state."""
    x = list(x0)
    t = t0
    for _ in range(n_steps):
        x = rk4(f, t, x, dt)
        t += dt
    return x
