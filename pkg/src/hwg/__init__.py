"""Fiberwise minimizing movements of discrete measures on metric graphs."""
from .errors import (AdmissibilityError, AmbiguityError, CapacityError, ConsistencyError,
                     HWGError, InvalidArgument, PreconditionError)
from .graph import EdgePoint, MetricGraph, VertexRef, star_tree
from .measures import Context, DiscreteMeasure, MemoryField
from .transport import TransportPlan, displacement, field_w, solve_ot, w2
from .scheme import (GQE, Isotropic, PurelyQuadratic, W2Quadratic, contraction_factor,
                     jko_step_numeric, jko_step_quadratic, run_scheme)

__version__ = "0.1.0"
