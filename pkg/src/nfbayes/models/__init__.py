from .base import (
    ENUM_CAP_DEFAULT,
    DimensionMismatchError,
    IntractableSizeError,
    Model,
)
from .ergm import ErgmModel, GWESP_DECAY, gwesp_weights
from .io import (
    read_edge_list,
    read_item_responses,
    read_lattice,
    write_edge_list,
    write_item_responses,
    write_lattice,
)
from .isingnet import IsingNetworkModel
from .potts import PottsModel

__all__ = [
    "ENUM_CAP_DEFAULT",
    "DimensionMismatchError",
    "IntractableSizeError",
    "Model",
    "PottsModel",
    "ErgmModel",
    "IsingNetworkModel",
    "GWESP_DECAY",
    "gwesp_weights",
    "read_lattice",
    "write_lattice",
    "read_edge_list",
    "write_edge_list",
    "read_item_responses",
    "write_item_responses",
]
