# File: __main__.py
# Date: 12-10-2026
#
import sys

from .cli import main

sys.exit(main())
