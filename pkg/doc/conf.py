# -*- coding: utf-8 -*-
#
# Sphinx configuration of python-liuw

import os
import sys

# autodoc imports the package from the source tree
sys.path.insert(0, os.path.abspath('..'))

from liuw import VERSION

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.coverage',
              'sphinx.ext.viewcode', 'sphinx.ext.mathjax']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'python-liuw'
copyright = '2026, the python-liuw developers'

version = '%d.%d' % VERSION[:2]
release = '.'.join(map(str, VERSION))

today_fmt = '%B %d, %Y'
exclude_patterns = ['_build']

add_function_parentheses = True
add_module_names = False
autodoc_member_order = 'bysource'
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
html_show_sourcelink = True
htmlhelp_basename = 'python-liuwdoc'

latex_documents = [
    ('index', 'python-liuw.tex', 'python-liuw Documentation',
     'the python-liuw developers', 'manual'),
]

man_pages = [
    ('index', 'liuw', 'python-liuw Documentation',
     ['the python-liuw developers'], 1)
]
