"""Built-in model problems: exact solution, source and boundary data."""
from dataclasses import dataclass

import numpy as np

from .enrichment import corner_singular_function, oscillatory_function
from .fields import Field

PI = np.pi


@dataclass
class Problem:
    """``-lap u = f`` in the domain, ``u = g_D`` on its boundary.

    ``enrichment`` lists the functions offered to the enriched spaces and
    ``singular_point`` is the centre used by the cut-off.
    """

    name: str
    domain: str
    exact: Field
    source: Field
    dirichlet: Field
    enrichment: tuple
    singular_point: tuple


def _sin_sin():
    def value(x):
        return np.sin(PI * x[:, 0]) * np.sin(PI * x[:, 1])

    def gradient(x):
        sx, sy = np.sin(PI * x[:, 0]), np.sin(PI * x[:, 1])
        cx, cy = np.cos(PI * x[:, 0]), np.cos(PI * x[:, 1])
        return PI * np.column_stack([cx * sy, sx * cy])

    def laplacian(x):
        return -2.0 * PI ** 2 * value(x)

    return value, gradient, laplacian


def lshape_corner(omega=1.5 * PI):
    """``u = sin(pi x) sin(pi y) + psi`` on the L-shape, ``psi`` the harmonic
    corner function at the origin."""
    psi = corner_singular_function(1, omega=omega)
    v, g, lap = _sin_sin()
    exact = Field(v, g, lap, parts=[(1.0, psi, "value")])
    source = Field(lambda x: -lap(x))
    return Problem("lshape_corner", "l_shape", exact, source, exact, (psi,), (0.0, 0.0))


def square_oscillatory(epsilon=0.05):
    """``u = sin(pi x) sin(pi y) + sin(1 / (|x - c|^2 + epsilon))`` on the unit square."""
    psi = oscillatory_function(epsilon)
    v, g, lap = _sin_sin()
    exact = Field(v, g, lap, parts=[(1.0, psi, "value")])
    source = Field(lambda x: -lap(x), parts=[(-1.0, psi, "laplacian")])
    return Problem("square_oscillatory", "square", exact, source, exact, (psi,), (0.5, 0.5))


def _polynomial_problem(name, value, gradient, laplacian, domain):
    exact = Field(value, gradient, laplacian)
    source = Field(lambda x: -laplacian(x))
    return Problem(name, domain, exact, source, exact, (corner_singular_function(),), (0.0, 0.0))


def linear(domain="l_shape"):
    return _polynomial_problem(
        "linear",
        lambda x: x[:, 0] + x[:, 1],
        lambda x: np.ones((len(x), 2)),
        lambda x: np.zeros(len(x)),
        domain,
    )


def quadratic(domain="l_shape"):
    return _polynomial_problem(
        "quadratic",
        lambda x: x[:, 0] ** 2 - x[:, 1] ** 2,
        lambda x: np.column_stack([2.0 * x[:, 0], -2.0 * x[:, 1]]),
        lambda x: np.zeros(len(x)),
        domain,
    )


def corner(omega=1.5 * PI):
    """``u = psi`` itself: the scheme reproduces it under enrichment."""
    psi = corner_singular_function(1, omega=omega)
    exact = Field(parts=[(1.0, psi, "value")])
    return Problem("corner", "l_shape", exact, Field(), exact, (psi,), (0.0, 0.0))


PROBLEMS = {
    "lshape_corner": lambda omega=1.5 * PI, epsilon=0.05: lshape_corner(omega),
    "square_oscillatory": lambda omega=1.5 * PI, epsilon=0.05: square_oscillatory(epsilon),
    "linear": lambda omega=1.5 * PI, epsilon=0.05: linear(),
    "quadratic": lambda omega=1.5 * PI, epsilon=0.05: quadratic(),
    "corner": lambda omega=1.5 * PI, epsilon=0.05: corner(omega),
}


def get_problem(name, omega=1.5 * PI, epsilon=0.05):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(
            "unknown problem %r (choose from %s)" % (name, ", ".join(sorted(PROBLEMS)))
        ) from None
    return factory(omega=omega, epsilon=epsilon)
