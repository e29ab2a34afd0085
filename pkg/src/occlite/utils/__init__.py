from occlite.utils.io import load_json, read_occt, save_json, write_occt
from occlite.utils.prng import SplitMix64
from occlite.utils.progress_bar import tqdm_wrapper

__all__ = [
    "SplitMix64",
    "load_json",
    "read_occt",
    "save_json",
    "tqdm_wrapper",
    "write_occt",
]
