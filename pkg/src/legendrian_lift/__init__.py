"""Numerical study of path lifting through a non-integrable plane field.

The package builds an explicit planar foliation whose real trace is a
global center, transports points along its blow-up holonomy, lifts closed
orbits through distribution charts dz = P dx + Q dy, and measures the
quadratic displacement law and leaf-accumulation phenomenon that obstruct
first integrals. See README.md for the CLI.
"""

from .analysis import (AccumulationRun, DisplacementRecord, GronwallReport,
                       ScanResult, accumulation_run, default_experiment_scale,
                       displacement, displacement_scan, gronwall_check,
                       stokes_cross_check)
from .errors import (CheckFailure, ConfigError, DomainExit, IntegrationError,
                     LiftError, NonIntegralWindingError, NumericalError,
                     PoleOnPathError, QuadratureError)
from .expr import (DivisionByZero, ExprSyntaxError, RationalExpr, compile_fn,
                   derivative, evaluate, parse, render)
from .foliation import (LOG2_OVER_PI, CenterOrbit, LogarithmicForm, LogTerm,
                        center_form, center_holonomy_loop, compute_orbit,
                        connecting_curve, halving_loop, holonomy_form,
                        holonomy_map, length_bound, real_form_identity_check,
                        residue_oracle, transport_exponent_end)
from .geometry import (ParamPath, PathPiece, Polydisc, circle_path,
                       contour_integral, length, line_segment, winding_number)
from .lifting import (DistributionChart, LiftedPath, NormalFormError, bounds,
                      chart_domain, integrability_defect, legendrian_lift_field,
                      lift_deviation_check, lift_path, make_chart)

__version__ = "0.1.0"
