"""JSON documents: manifold specs, run results and reports."""

import json
import math
import warnings
from pathlib import Path
from typing import Any, Dict, Hashable, List, Tuple, Union

import numpy as np
import structlog

from owid.charnum.common import DuplicatedKeyWarning

logger = structlog.get_logger()


def _keep_last_and_warn(ordered_pairs: List[Tuple[Hashable, Any]]) -> Dict[Hashable, Any]:
    document: Dict[Hashable, Any] = {}
    duplicated = []
    for key, value in ordered_pairs:
        if key in document:
            duplicated.append(key)
        document[key] = value
    if duplicated:
        logger.warning("json.duplicated_keys", keys=duplicated)
        warnings.warn(f"Duplicated keys: {', '.join(map(str, duplicated))}.", DuplicatedKeyWarning)
    return document


def load_json(json_file: Union[str, Path], warn_on_duplicated_keys: bool = True) -> Any:
    """Load data from a json file, optionally warning about duplicated keys.

    Only the value of the latest duplicated key is kept.

    Parameters
    ----------
    json_file : Path or str
        Path to json file.
    warn_on_duplicated_keys : bool
        True to raise a warning if there are duplicated keys in json file. False to ignore.

    Returns
    -------
    data : dict
        Data loaded from json file.

    """
    hook = _keep_last_and_warn if warn_on_duplicated_keys else None
    with open(json_file, "r") as f:
        return json.loads(f.read(), object_pairs_hook=hook)


def to_jsonable(data: Any) -> Any:
    """Replace non-finite floats by strings ("inf", "-inf", "nan") and numpy scalars by Python ones."""
    if isinstance(data, dict):
        return {key: to_jsonable(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_jsonable(value) for value in data]
    if isinstance(data, np.ndarray):
        return to_jsonable(data.tolist())
    if isinstance(data, np.generic):
        data = data.item()
    if isinstance(data, float) and not math.isfinite(data):
        return str(data)
    return data


def save_json(data: Any, json_file: Union[str, Path], **kwargs: Any) -> None:
    """Save data to a json file, creating parent folders.

    Parameters
    ----------
    data : Any
        Data to be stored in a json file.
    json_file : str
        Path to output json file.
    kwargs:
        Additional keyword arguments for json.dump (defaults: indent=2).

    """
    json_file = Path(json_file)
    json_file.parent.mkdir(parents=True, exist_ok=True)
    kwargs.setdefault("indent", 2)

    with open(json_file, "w") as _json_file:
        json.dump(to_jsonable(data), _json_file, **kwargs)
