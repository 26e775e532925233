import hashlib
from typing import Dict, List, Optional

from pcgmum import __version__
from pcgmum.models.schemas import MumConfig
from pcgmum.utils.errors import DomainError


def parse_int_list(text: str) -> List[int]:
    """Parse a comma separated list of integers such as '1,2,1'"""
    if not text or not text.strip():
        return []
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise DomainError(f"expected comma separated integers, got {text!r}")


def config_hash(config: Optional[MumConfig]) -> Optional[str]:
    """Short sha256 of the canonical config JSON"""
    if config is None:
        return None
    canonical = config.model_dump_json(by_alias=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def metadata_header(config: Optional[MumConfig] = None, grid_size: Optional[int] = None) -> Dict[str, object]:
    return {
        "tool": "pcgmum",
        "version": __version__,
        "config_hash": config_hash(config),
        "grid_size": grid_size,
    }


def csv_comment_lines(metadata: Dict[str, object]) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in metadata.items() if value is not None)
