"""Wyner-Ziv estimators for distributed mean estimation with decoder side information."""

from ._validation import BudgetError, ConstraintError, DimensionError
from .estimators import WynerZivMeanEstimator, WynerZivQuantizer
from .gausswz import GwzConfig, GwzResult, gwz_params, gwz_run
from .mq import MqParams, MqWord, mq_decode, mq_encode, mq_params
from .protocol import (
    ErrorStats,
    ProtocolConfig,
    ProtocolResult,
    decomposition_check,
    empirical_alpha_beta,
    make_codec,
    run_protocol,
    theory_bound,
)
from .publicrand import (
    RandomStream,
    draw_signs,
    draw_subset,
    draw_uniform,
    fwht,
    rotate,
    rotate_inverse,
)
from .wz_known import (
    SwzMessage,
    WzKnownParams,
    known_params,
    rmq_decode,
    rmq_encode,
    swz_decode,
    swz_encode,
)
from .wz_unknown import (
    BrdaqMessage,
    RdaqLevels,
    RdaqMessage,
    UnknownParams,
    brdaq_decode,
    brdaq_encode,
    daq_decode,
    daq_encode,
    iterated_log_star,
    rdaq_decode,
    rdaq_encode,
    rdaq_levels,
    srdaq_decode,
    srdaq_encode,
    unknown_params,
)

__version__ = "0.1.0"
