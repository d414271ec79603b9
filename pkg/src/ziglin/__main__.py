"""Allow ``python3 -m ziglin``."""
import sys

from .cli import main

sys.exit(main())
