"""Near-field CRB minimisation for fluid-antenna ISAC through a STARS surface."""

from .design import ApvState, StarsProfile, TransmitDesign, user_sinr
from .fisher import CrbResult, FimBlocks, UnidentifiableTargetError, crb_from_fim, fim_blocks
from .geometry import ChannelSet, GeometryError, SystemConfig, build_channels

__all__ = [
    "ApvState", "ChannelSet", "CrbResult", "FimBlocks", "GeometryError", "StarsProfile",
    "SystemConfig", "TransmitDesign", "UnidentifiableTargetError", "build_channels",
    "crb_from_fim", "fim_blocks", "user_sinr",
]
