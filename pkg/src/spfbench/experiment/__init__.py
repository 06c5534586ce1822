from .config import DEFAULTS, ExperimentConfig
from .csvio import parse_csv, read_csv, write_csv
from .spfd import Container, decode_container, encode_container, read_container, write_container

__all__ = ["DEFAULTS", "ExperimentConfig", "parse_csv", "read_csv", "write_csv", "Container",
           "decode_container", "encode_container", "read_container", "write_container"]
