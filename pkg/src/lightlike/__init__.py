"""Connections on light-like (degenerate-metric) manifolds, built and checked on a chart."""
from .connection import (ConnectionField, ConstructionError, covariant_derivative,
                         koszul_connection, koszul_solve_at, levi_civita,
                         levi_civita_connection, nonmetricity_of, torsion_of)
from .degenerate import (AugmentedMetric, DegeneracyError, DegenerateMetricBundle,
                         NullityMismatch, build_augmented_metric, radical_basis,
                         validate_bundle)
from .expr import ScalarExpression, differentiate, evaluate, parse_expression
from .manifest import ManifoldManifest, load_manifest
from .sampling import ConditionReport, Tolerances, VerificationConfig
from .tensor import (CallbackField, ExpressionField, TensorField, TensorValue, contract,
                     exterior_derivative_1form, field_from_strings, lie_bracket,
                     lie_derivative_metric, tensor_product)
from .verify import PipelineReport, run_proposition1, run_theorem_ii

__version__ = "0.1.0"
