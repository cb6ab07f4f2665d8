"""Model checkpoints: parameters, model/window configuration and vocabulary."""

from .config import ConfigError, TKConfig, WindowConfig, config_from_dict, config_mismatch, config_to_dict
from .container import read_container, write_container
from .model import TKModel, TKParameters
from .text import Vocabulary

MAGIC = b"TKCKPT\x00\x01"
FORMAT_VERSION = 1


class CheckpointMismatchError(ConfigError):
    pass


def save_checkpoint(path, model):
    header = {
        "format_version": FORMAT_VERSION,
        "model": config_to_dict(model.config),
        "window": config_to_dict(model.window),
        "vocabulary": {"terms": list(model.vocab.terms), "min_occurrence": model.vocab.min_occurrence},
        "parameters": [{"id": p.name, "group": p.group} for p in model.parameters()],
    }
    write_container(path, MAGIC, header, {p.name: p.data for p in model.parameters()})


def load_checkpoint(path, expected_model=None, expected_window=None):
    """Load a :class:`TKModel`; optionally verify it against expected configs.

    A differing field raises :class:`CheckpointMismatchError` naming it.
    """
    header, arrays = read_container(path, MAGIC)
    if header.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
    config = config_from_dict(TKConfig, header["model"])
    window = config_from_dict(WindowConfig, header["window"])
    for expected, actual, section in ((expected_model, config, "model"), (expected_window, window, "window")):
        if expected is None:
            continue
        name = config_mismatch(expected, actual)
        if name is not None:
            raise CheckpointMismatchError(
                f"checkpoint {section}.{name} = {getattr(actual, name)!r} but config has "
                f"{getattr(expected, name)!r}"
            )
    vocab = Vocabulary(header["vocabulary"]["terms"], header["vocabulary"]["min_occurrence"])
    params = TKParameters.from_arrays(arrays, config, config.windowed)
    groups = {e["id"]: e["group"] for e in header["parameters"]}
    for p in params.named():
        if groups.get(p.name) != p.group:
            raise ConfigError(f"{path}: parameter {p.name} has group {groups.get(p.name)!r}")
    return TKModel(config, params, vocab, window)
