"""Entry point for python -m anisoperturb."""

import sys

from .cli import main

sys.exit(main())
