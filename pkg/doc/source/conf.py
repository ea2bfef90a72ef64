# Sphinx configuration for the ftsdos documentation.

import sys
import os

import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('../../'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

source_suffix = '.rst'
master_doc = 'index'

project = 'ftsdos'
copyright = '2026, ftsdos developers'
author = 'ftsdos developers'
version = '0.1'
release = '0.1'

pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
