"""Certified numerics for the Gaussian coupling of a symmetric random walk.

The blow-up errors Delta_{k,m}, the weak and sharpened inequalities on the
quantile transform of a Rademacher sum, and the Chernoff/rate-function
machinery behind them, evaluated at arbitrary precision with certified
comparisons.
"""

from .binomial import ExactDyadic, cdf, pmf, support, tail_prob
from .conjecture import (CertifiedResult, DeltaRecord, StepFunction, SweepReport,
                         check_sharp, check_weak, delta, delta_enclosure, figure1_data,
                         figure2_data, psi_m, sharp_margin, step_function, sweep,
                         tusnady_margin)
from .errors import (DomainError, EvaluationFailure, IndexOutOfRange, InvalidBracket,
                     NoSignChange, NotInSupport, RangeError, TusnadyError, Undecidable)
from .gaussian import Phi, Q, Q_inv, log_Q
from .numerics import (CompareOutcome, Enclosure, LazyReal, Relation, RootResult,
                       certified_compare, find_root_monotone)
from .rate import MGFSpec, alpha, couple_to_gauss, f_eval, f_inv, log_rho, rho

__version__ = "0.1.0"
