"""Sphinx configuration for the owid-charnum documentation.

The API pages are regenerated from the package on every build (``api/`` is not tracked).
"""
import os
import sys

from sphinx.ext.apidoc import main as apidoc

ROOT = os.path.abspath("..")
PACKAGE = os.path.join(ROOT, "owid", "charnum")

# ``owid.charnum`` for the package modules, ``charnum`` for the apidoc page names.
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, "owid"))

from owid.charnum import __version__  # noqa: E402

project = "owid-charnum"
copyright = "2022, Our World In Data"
author = "Our World In Data"
version = release = __version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
]

# Docstrings use numpy sections and unicode formulas.
napoleon_google_docstring = False
napoleon_numpy_docstring = True
napoleon_use_rtype = False
autodoc_member_order = "bysource"
autodoc_typehints = "description"
autodoc_default_options = {
    "members": True,
    "undoc-members": True,
    "show-inheritance": True,
}
exclude_patterns = ["_build", "api/modules.rst"]

html_theme = "furo"
html_title = f"owid-charnum {release}"
html_theme_options = {"sidebar_hide_name": False}
html_context = {
    "display_github": True,
    "github_user": "owid",
    "github_repo": "owid-charnum",
    "github_version": "main",
    "conf_py_path": "docs/",
}

apidoc(["-f", "-e", "-M", "-o", os.path.join(os.path.dirname(__file__), "api"), PACKAGE])
