"""Probabilistically shaped multi-level polar coding on real fading channels."""

from .channel import AWGN, RAYLEIGH, ChannelBatch, ChannelConfig, noise_variance, transmit
from .modem import (
    GRAY,
    LLR_CLIP,
    NBC,
    SHIFTED_NBC,
    Labeling,
    SymbolPmf,
    ask_symbols,
    bit_llr_multistage,
    bit_llrs_independent,
    gray_labeling,
    inner_indicator_level,
    make_labeling,
    map_symbols,
    mb_pmf,
    nbc_labeling,
    pmf_from_levels,
    sbs_pmf,
    shifted_nbc_label,
    shifted_nbc_labeling,
    uniform_pmf,
)
from .polar import (
    CRC4,
    CRC16,
    CrcSpec,
    PolarCodeSpec,
    crc_attach,
    crc_check,
    encode,
    frozen_bit_stream,
    polar_transform,
)
from .reliability import (
    ReliabilityOrder,
    SequenceFormatError,
    build_reliability_order,
    default_order,
    gaussian_approximation_order,
    load_order,
    polarization_weight_order,
)
from .scl import SclDecoder, scl_decode
from .shaping import (
    ShapingConfig,
    asymptotic_shaping_count,
    calibrate_s,
    generate_shaping_bits,
    measure_ones_fraction,
    select_shaping_set,
)

__version__ = "0.1.0"
