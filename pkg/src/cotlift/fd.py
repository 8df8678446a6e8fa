"""Central finite-difference stencils shared by every oracle.

Five-point (4th order) stencils throughout. The coefficient families met in
practice have poles just outside their admissible t-window, so their high
derivatives grow quickly near the window edge; 2nd-order differencing at
h = 1e-4 would lose too many digits there, 4th-order keeps the oracles three
to four orders below the tolerances they guard.
"""

import numpy as np

STEP = 1e-4


def central_d1(f, z, axis, h=STEP):
    """d f / d z_axis by the 5-point stencil (-1, 8, -8, 1)/12h."""
    e = np.zeros(np.size(z))
    e[axis] = 1.0
    return (-f(z + 2 * h * e) + 8.0 * f(z + h * e)
            - 8.0 * f(z - h * e) + f(z - 2 * h * e)) / (12.0 * h)


def directional_d1(f, z, v, h=STEP):
    """Derivative of f along the (not necessarily unit) vector v."""
    v = np.asarray(v, float)
    return (-f(z + 2 * h * v) + 8.0 * f(z + h * v)
            - 8.0 * f(z - h * v) + f(z - 2 * h * v)) / (12.0 * h)


def grad(f, z, h=STEP):
    """Stack central_d1 over every coordinate; the derivative axis comes first."""
    return np.stack([central_d1(f, z, a, h) for a in range(np.size(z))])
