"""Soldering obstructions of tensor fields along submanifolds, in slice charts."""

from .catalog import GEOMETRY_IDS, CatalogError, GeometryBundle, get_geometry, list_geometries
from .chartcalc import (
    CompatibilityError,
    DegenerateMetricError,
    DomainError,
    MetricField,
    ScalarField,
    SliceChart,
    TensorField,
    christoffels,
    constant_field,
    covariant_derivative,
    endomorphism_field,
    exterior_derivative_2form,
    interior_product,
    kahler_form,
    lie_derivative,
    musical_flat,
    musical_sharp,
    nijenhuis,
    vector_field,
)
from .soldering import (
    AdaptednessError,
    check_adapted,
    classify_complex_structure,
    is_soldered,
    soldering_form,
    soldering_obstruction,
)
from .subgeo import (
    Normalization,
    NormalizationError,
    Submanifold,
    induced_metric,
    is_totally_geodesic,
    second_fundamental_form,
    shape_operator,
    weingarten_decompose,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptednessError",
    "CatalogError",
    "CompatibilityError",
    "DegenerateMetricError",
    "DomainError",
    "GEOMETRY_IDS",
    "GeometryBundle",
    "MetricField",
    "Normalization",
    "NormalizationError",
    "ScalarField",
    "SliceChart",
    "Submanifold",
    "TensorField",
    "check_adapted",
    "christoffels",
    "classify_complex_structure",
    "constant_field",
    "covariant_derivative",
    "endomorphism_field",
    "exterior_derivative_2form",
    "get_geometry",
    "induced_metric",
    "interior_product",
    "is_soldered",
    "is_totally_geodesic",
    "kahler_form",
    "lie_derivative",
    "list_geometries",
    "musical_flat",
    "musical_sharp",
    "nijenhuis",
    "second_fundamental_form",
    "shape_operator",
    "soldering_form",
    "soldering_obstruction",
    "vector_field",
    "weingarten_decompose",
]
