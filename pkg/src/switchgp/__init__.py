"""Gaussian-process regression with sigmoid change-point kernels.

Covariance functions compose as expression trees (squared exponential,
quadratic polynomial, damped-oscillator, sigmoid gates) so that physical
knowledge can be phased in and out of a model across operating regimes.
Includes exact GP training by marginal likelihood, a variational
heteroscedastic GP, synthetic regime-switching generators, and a CLI.
"""

from .dataset import Dataset, as_dataset, read_csv, write_csv
from .dsl import build_kernel, parse_kernel_spec, print_kernel_spec, to_kernel
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    NumericalError,
    OptimizationError,
    SwitchGPError,
)
from .gp import (
    GPRegressor,
    GPState,
    Posterior,
    build_state,
    cholesky_with_jitter,
    nlml,
    nlml_grad,
    predict,
    sample_prior,
)
from .kernels import (
    ColumnRef,
    KernelExpr,
    Poly2,
    Product,
    Sdof,
    SigmoidGate,
    SqExp,
    Sum,
    default_params,
    eval_kernel,
    eval_kernel_diag,
    gate,
    gate_out,
    kernel_grad,
    poly2,
    sdof,
    se,
    sigmoid,
)
from .metrics import ScoreReport, msll, nmse, score_predictions
from .optim import FdCheckResult, FitReport, OptConfig, fd_check, minimize
from .params import Param, ParamVector, apply_overrides
from .synth import (
    ChangePointSpec,
    OscillatorSpec,
    RegimeSpec,
    gen_changepoint,
    gen_oscillator,
    gen_regime,
)
from .vhgp import (
    HeteroscedasticGPRegressor,
    HGPState,
    HgpConfig,
    NoiseModel,
    VariationalState,
    fit_vhgp,
    mv_bound,
    predict_vhgp,
)

__version__ = "0.1.0"
