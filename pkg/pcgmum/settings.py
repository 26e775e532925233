import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Settings(BaseModel):
    grid_size: int = Field(4096, ge=64)
    wavelength_nm: float = Field(632.8, gt=0)
    lens_spacing_m: float = Field(0.29, gt=0)
    pixel_pitch_um: float = Field(8.0, gt=0)
    beam_radius_mm: float = Field(2.54, gt=0)
    log_level: str = "INFO"
    search_max_nodes: int = Field(50_000_000, ge=1)


def get_settings() -> Settings:
    """Read settings from the environment (.env honoured)"""
    raw = {
        "grid_size": os.getenv("PCG_GRID_SIZE"),
        "wavelength_nm": os.getenv("PCG_WAVELENGTH_NM"),
        "lens_spacing_m": os.getenv("PCG_LENS_SPACING_M"),
        "pixel_pitch_um": os.getenv("PCG_PIXEL_PITCH_UM"),
        "beam_radius_mm": os.getenv("PCG_BEAM_RADIUS_MM"),
        "log_level": os.getenv("PCG_LOG_LEVEL"),
        "search_max_nodes": os.getenv("PCG_SEARCH_MAX_NODES"),
    }
    return Settings(**{key: value for key, value in raw.items() if value not in (None, "")})


def configure_logging(level: str = None, stream=None) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format=LOG_FORMAT,
        stream=stream
    )
