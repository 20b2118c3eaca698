"""Tracking control by a continuous Newton-Raphson flow on predicted outputs.

The library has three layers:

* plants, predictors, and the variable-gain integrator controllers
  (``core``, ``integrate``, ``predict``, ``control``);
* gain-uniform stability certification for linear loops (``linstab``);
* benchmark scenarios and platoon logic (``scenarios``), with a CLI
  (``cli``) for running them from TOML configs.
"""

from .control import (ClosedLoopTrace, ControllerConfig, asymptotic_errors,
                      control_rate, run_closed_loop, step_closed_loop)
from .core import (AugmentedState, PlantModel, ReferenceSignal, StaticPlant,
                   TimeGrid, eval_reference)
from .integrate import (euler_step, expm, expm_integral, integrate_const_input,
                        rk4_step)
from .linstab import (BivariatePoly, LinearSystem, StabilityCertificate,
                      build_phi_psi, certify, char_poly_bivariate,
                      extract_p0_q, qtilde_identity_check, root_locus)
from .predict import (PredictorModel, fd_jacobian, lti_predictor,
                      numeric_predictor, unicycle_predictor)

__version__ = "0.1.0"

__all__ = [
    "AugmentedState", "BivariatePoly", "ClosedLoopTrace", "ControllerConfig",
    "LinearSystem", "PlantModel", "PredictorModel", "ReferenceSignal",
    "StabilityCertificate", "StaticPlant", "TimeGrid", "asymptotic_errors",
    "build_phi_psi", "certify", "char_poly_bivariate", "control_rate",
    "euler_step", "eval_reference", "expm", "expm_integral", "extract_p0_q",
    "fd_jacobian", "integrate_const_input", "lti_predictor",
    "numeric_predictor", "qtilde_identity_check", "rk4_step", "root_locus",
    "run_closed_loop", "step_closed_loop", "unicycle_predictor",
]
