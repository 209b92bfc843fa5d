"""Impulsive superlinear oscillator toolkit: velocity-reversal impulses,
action-angle charts, time-1 section map, twist/rotation/curve/orbit analyses."""

__version__ = "0.1.0"

from ._kernel import BACKEND as KERNEL_BACKEND
from .model import (ConfigError, ImpulseSchedule, SystemConfig, TrigPoly,
                    config_hash, eval_coefficient, load_config, save_config)
from .special import (ActionAngle, OriginError, PhaseState, SpecialFunctions,
                      SpecialFunctionError, compute_special_functions,
                      curve_amplitude, jacobian_check, to_action_angle, to_phase)
from .flow import (EscapeError, StepUnderflowError, Trajectory, apply_impulse,
                   flow_map, integrate_segment, rhs)
from .poincare import (OriginGuardError, PoincarePoint, TwistProfile,
                       intersection_check, iterate_map, map_jacobian,
                       poincare_intersection_check, poincare_map, twist_profile,
                       unforced_delta_theta)
from .analysis import (AnalysisError, BoundednessRecord, DiophantineError,
                       DiophantineVerdict, InvariantCurveFit, PeriodicOrbit,
                       PeriodicOrbitSearch, ResonanceError, RotationEstimate,
                       boundedness_scan, diophantine_check, find_invariant_curve,
                       find_periodic_orbit, rotation_number, weighted_birkhoff)
