# bornlab/__main__.py - python -m bornlab
import sys

from .cli import main

sys.exit(main())
