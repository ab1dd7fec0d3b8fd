"""
polywrithe: writhe of closed polygons and smooth space curves.

Exact solid-angle writhe for polygons, adaptive quadrature for smooth and
piecewise-smooth curves, corner decompositions of the writhe difference
between a curve and an inscribed polygon, and an a priori error
certificate for inscribed polygons.
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DomainError, HypothesisError,
                     NumericalIntegrityError)
from .geometry import (edge_pair_solid_angle, edge_pair_solid_angles,
                       signed_polygon_area, signed_triangle_area,
                       triangle_areas)
from .curves import (Arc, HelixArc, Line, ParametricCurve, PiecewiseCurve,
                     PolygonalCurve, circle, closed_helix, closed_helix_writhe,
                     ellipse, fourier_curve, inscribe, inscribe_with_max_edge,
                     make_curve, max_edge_length, read_polygon, round_corners,
                     tantrix, torus_knot, write_polygon)
from .writhe import (FramedCurve, QuadratureSpec, linking_number,
                     pushoff_linking, twist, writhe_mod2_from_tantrix,
                     writhe_piecewise_quadrature, writhe_polygonal,
                     writhe_polygonal_oracle, writhe_smooth_quadrature)
from .fuller import (RibbonSampling, check_hypotheses, delta_writhe_polygonal,
                     delta_writhe_smooth, ribbon_area)
from .bounds import (DerivativeBounds, ErrorCertificate, arclength_bounds,
                     detect_planar_runs, error_bound, lemma_chord_bounds,
                     lemma_tangent_angle, regional_error_bound)
