"""Initialisation gain 1/||v_steady|| from whatever knowledge is at hand."""

from ..errors import NoInformation
from ..spectral import (
    markov_from_graph,
    steady_state_exact,
    vsteady_norm_from_degrees,
    vsteady_norm_from_family,
)


def pipeline_gain(graph=None, degree_sample=None, n_estimate=None,
                  family=None, fitted_exponent=None) -> float:
    """Best-available gain: exact graph > degree sample > family law.

    exact: power-iteration stationary norm of the averaging operator.
    degree sample: sample-moment estimate (requires n_estimate).
    family: n_estimate^alpha with alpha = 0.5 or a fitted exponent.
    """
    if graph is not None:
        norm = steady_state_exact(markov_from_graph(graph)).norm
    elif degree_sample is not None and n_estimate is not None:
        norm = vsteady_norm_from_degrees(degree_sample, n_estimate)
    elif family is not None and n_estimate is not None:
        norm = vsteady_norm_from_family(family, n_estimate, fitted_exponent)
    else:
        raise NoInformation(
            "need a graph, a degree sample + n estimate, or a family + n estimate")
    return 1.0 / norm
