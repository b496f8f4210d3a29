"""Input/Output methods."""
from owid.charnum.io.df import to_file as df_to_file
from owid.charnum.io.grid import load_grid, save_grid
from owid.charnum.io.json import load_json, save_json


__all__ = [
    "load_json",
    "save_json",
    "df_to_file",
    "load_grid",
    "save_grid",
]
