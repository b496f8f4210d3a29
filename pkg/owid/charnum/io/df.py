"""Tabular output of sweeps and reports."""
import inspect
from pathlib import Path
from typing import Any, Union

import pandas as pd


def _has_index(df: pd.DataFrame) -> bool:
    return df.index.names[0] is not None


def to_file(df: pd.DataFrame, file_path: Union[str, Path], overwrite: bool = True, **kwargs: Any) -> None:
    """Save dataframe to a file whose format follows the extension of `file_path`.

    Missing parent folders are created. A dummy index is not written unless `index` is passed explicitly.
    Extra keyword arguments go to the matching ``df.to_*`` method.

    Parameters
    ----------
    df : pd.DataFrame
        Dataframe to be stored in a file.
    file_path : Union[str, Path]
        Path to file to be created.
    overwrite : bool, optional
        True to overwrite file if it already exists. False to raise an error if file already exists.

    """
    file_path = Path(file_path)
    extension = file_path.suffix.lstrip(".").lower()
    file_path.parent.mkdir(parents=True, exist_ok=True)

    if file_path.is_file() and not overwrite:
        raise FileExistsError("Failed to save dataframe because file exists and 'overwrite' is False.")

    writers = {"csv": df.to_csv, "json": df.to_json, "txt": df.to_string}
    if extension not in writers:
        raise ValueError(f"Cannot write a table to .{extension}; use one of {sorted(writers)}.")
    save_function = writers[extension]

    if ("index" in inspect.signature(save_function).parameters) and ("index" not in kwargs):
        kwargs["index"] = _has_index(df=df)
    if extension == "csv":
        kwargs.setdefault("decimal", ".")
        kwargs.setdefault("float_format", "%.12g")

    save_function(file_path, **kwargs)
