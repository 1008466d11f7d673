from .curves import (
    CURVES,
    Curve,
    accelerated_worldline,
    circular_worldline,
    great_circle,
    latitude_circle,
    line,
)
from .holonomy import rotation_angle, wrap_angle
from .metric import (
    MANIFOLDS,
    ConnectionField,
    Manifold,
    MetricField,
    christoffels_from_metric,
    euclidean,
    manifold,
    minkowski,
    polar_plane,
    sphere2,
)
from .transports import (
    LAWS,
    DeformationField,
    VectorField,
    covariant_acceleration,
    covariant_jacobian,
    fermi_B,
    fermi_walker_B,
    jaumann_B,
    law_with_deformation,
    named_law,
    parallel_law,
    sigma_of_X,
    truesdell_B,
    vorticity,
)
