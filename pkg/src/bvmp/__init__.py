"""Adaptive binary vector message passing decoding of regular LDPC codes."""

from .channel import ChannelParams, channel_llr, design_rate, ebno_db_to_sigma2, transmit
from .code import (
    LdpcCode,
    LdpcEncoder,
    count_four_cycles,
    encode,
    from_alist,
    generate_regular,
    syndrome_check,
    to_alist,
)
from .decoder import (
    MODE_ITERATION,
    MODE_STATE_ADAPTIVE,
    MODE_STATE_FIXED,
    DecodeResult,
    DecoderConfig,
    DecoderState,
    cnd_update,
    decode,
    measure_state,
    vnd_update,
)
from .density import (
    DeState,
    DeTrace,
    WeightDistribution,
    build_iteration_tables,
    build_state_tables,
    channel_weight_distribution,
    cnd_de_step,
    hypergeometric_xor_fold,
    run_de,
    syndrome_de,
    vnd_de_step,
)
from .harness import CampaignConfig, CampaignResult, PointResult, run_campaign, run_point
from .messages import (
    DEFAULT_L_MAX,
    W2LTable,
    build_w2l_row,
    l_to_prob,
    prob_to_weight,
    quantize_state,
    sample_vector,
    syndrome_information,
    w2l_from_distribution,
    xor_vectors,
)
from .schedule import LengthSchedule, optimize, tables_for_schedule

__all__ = [name for name in dir() if not name.startswith("_")]
