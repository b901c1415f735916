project = "python-momentchain"
copyright = "2022, python-momentchain contributors"
author = "python-momentchain contributors"
extensions = [
    "sphinx_rtd_theme",
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.viewcode",
]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
html_theme = "sphinx_rtd_theme"
master_doc = "index"

autodoc_member_order = "bysource"

doctest_global_setup = """
from momentchain import MomentSpec, TransitionKernel, make_two_sided, make_uniform
# Nonuniform grid used throughout the examples.
grid = make_two_sided(slope_neg=0.1, slope_pos=0.01)
# Log-return increments of GBM with mu=2, sigma^2=0.25, tau=0.0002.
spec = MomentSpec(M=1.875 * 0.0002, V=0.25 * 0.0002)
kernel = TransitionKernel(grid, spec)
"""
