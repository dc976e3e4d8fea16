from .bank import BLOCKS, FEATURE_NAMES, N_FEATURES, FeatureVector, extract_features
from .io import read_feature_csv, read_patches, write_feature_csv, write_patches
from .melpatch import PATCH_BANDS, PATCH_FRAMES, MelPatch, mel_patch
from .mrmr import SelectionResult, mrmr_select

__all__ = [
    "BLOCKS", "FEATURE_NAMES", "N_FEATURES", "FeatureVector", "extract_features",
    "PATCH_BANDS", "PATCH_FRAMES", "MelPatch", "mel_patch",
    "SelectionResult", "mrmr_select",
    "read_feature_csv", "write_feature_csv", "read_patches", "write_patches",
]
