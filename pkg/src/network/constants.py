from enum import Enum
from typing import Dict, NamedTuple


class ResBlockKind(str, Enum):
    RESBLOCK1 = "ResBlock1"  # identity shortcut
    RESBLOCK2 = "ResBlock2"  # 1x1 conv + BN shortcut


class ForwardMode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class ModelVariant(str, Enum):
    TCN = "tcn"
    TCN_SA = "tcn+sa"
    TCN_RES2 = "tcn+res2"
    TCN_SA_RES1 = "tcn+sa+res1"
    ETCN = "etcn"


class VariantToggles(NamedTuple):
    sa_enabled: bool
    res_enabled: bool
    res_block_kind: ResBlockKind


VARIANT_TOGGLES: Dict[ModelVariant, VariantToggles] = {
    ModelVariant.TCN: VariantToggles(False, False, ResBlockKind.RESBLOCK2),
    ModelVariant.TCN_SA: VariantToggles(True, False, ResBlockKind.RESBLOCK2),
    ModelVariant.TCN_RES2: VariantToggles(False, True, ResBlockKind.RESBLOCK2),
    ModelVariant.TCN_SA_RES1: VariantToggles(True, True, ResBlockKind.RESBLOCK1),
    ModelVariant.ETCN: VariantToggles(True, True, ResBlockKind.RESBLOCK2),
}

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
LOG_CLAMP = 1e-12

DEFAULT_DILATIONS = (1, 2, 4)
DEFAULT_TCN_CHANNELS = 32
DEFAULT_TCN_KERNEL = 5
DEFAULT_DROPOUT = 0.289
DEFAULT_ATTENTION_DIM = 16
DEFAULT_RES_KERNEL = 3

CHECKPOINT_FORMAT = "etcn-checkpoint"
CHECKPOINT_VERSION = 1
